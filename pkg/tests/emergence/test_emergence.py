import math
from fractions import Fraction

import pytest

from emergence_lab import errors, utils
from emergence_lab.config import Caps
from emergence_lab.counting import CountBracket, power_set_cover
from emergence_lab.emergence import (
    EXHAUSTIVE,
    MeasureEnsemble,
    ScalingCell,
    bolley_log_bound,
    box_dimension_estimate,
    bracket_cell,
    check_variational_bound,
    entropy_estimate,
    eps_grid,
    hyperspace_entropy_order,
    loglog,
    measure_emergence,
    measure_space_entropy_order,
    metric_order_estimate,
    mixture_candidates,
    pointwise_emergence,
    quantization,
    quantization_lower_bound,
)
from emergence_lab.measures import DiscreteMeasure, periodic_orbit_measure

GOLDEN_RATIO = (1 + math.sqrt(5)) / 2


def test_loglog():
    assert loglog(0) == 0
    assert loglog(-1.0) == 0
    assert loglog(math.e) == pytest.approx(1.0)


def test_eps_grid(shift2):
    assert eps_grid(shift2, [3, 1, 2, 1]) == [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)]


def test_cell_rates():
    cell = ScalingCell(n=2, eps=Fraction(1, 4), lower=4, upper=16, log_lower=math.log(4), log_upper=math.log(16))
    assert cell.double_log_upper == pytest.approx(math.log(math.log(16)))
    assert cell.scale == pytest.approx(math.log(4))

    based = ScalingCell(n=2, eps=Fraction(1, 4), lower=1, upper=1, log_lower=0.0, log_upper=0.0, base=8)
    assert based.double_log_lower == 0
    assert based.log_base == pytest.approx(math.log(8))
    assert cell.log_base is None


@pytest.mark.parametrize("m", [2, 3])
def test_full_shift_entropy_is_exact(m, shift2, shift3):
    system = {2: shift2, 3: shift3}[m]
    report = entropy_estimate(system, range(2, 11), [Fraction(1, 4)])

    fit = report.single_log[0]
    assert fit.exact_ratio == m
    assert fit.exact_slope == pytest.approx(math.log(m))
    assert fit.lower == pytest.approx(math.log(m))
    assert report.reference == pytest.approx(math.log(m))
    for cell in report.cells:
        assert cell.upper == m ** (cell.n + 2)
        assert cell.lower == m**cell.n


def test_golden_mean_entropy(golden):
    report = entropy_estimate(golden, range(20, 61), [Fraction(1, 4)])
    fit = report.single_log[0]

    assert fit.exact_ratio is None
    assert fit.upper == pytest.approx(math.log(GOLDEN_RATIO), abs=1e-6)
    assert fit.lower == pytest.approx(math.log(GOLDEN_RATIO), abs=1e-6)


def test_entropy_grid_is_ordered(shift2):
    report = entropy_estimate(shift2, [3, 1, 2], [Fraction(1, 8), Fraction(1, 2)], workers=2)
    assert [fit.eps for fit in report.single_log] == [Fraction(1, 2), Fraction(1, 8)]
    assert [eps for eps, _, _ in report.eps_trend] == [Fraction(1, 2), Fraction(1, 8)]
    assert report.summary()["mode"] == utils.ENTROPY


def test_mean_metric_entropy(shift2):
    report = entropy_estimate(shift2, range(1, 4), [Fraction(1, 2)], mode=utils.MEAN, restarts=0)
    for cell in report.cells:
        assert 1 <= cell.lower <= cell.upper


def test_exact_mean_metric_entropy(shift2):
    greedy = entropy_estimate(shift2, range(1, 3), [Fraction(1, 2)], mode=utils.MEAN, restarts=0)
    exact = entropy_estimate(shift2, range(1, 3), [Fraction(1, 2)], mode=utils.MEAN, strategy=utils.EXACT)

    assert exact.conventions["strategy"] == utils.EXACT
    for fast, slow in zip(greedy.cells, exact.cells):
        assert fast.lower <= slow.lower <= slow.upper <= fast.upper


def test_mean_metric_entropy_respects_the_caps(shift2):
    with pytest.raises(errors.ResourceLimitError):
        entropy_estimate(
            shift2, [1], [Fraction(1, 2)], mode=utils.MEAN, strategy=utils.EXACT, caps=Caps(exact=2)
        )
    with pytest.raises(errors.ResourceLimitError):
        entropy_estimate(shift2, [1], [Fraction(1, 2)], mode=utils.MEAN, caps=Caps(enumeration=2))


def test_entropy_rejects_bad_grids(shift2):
    with pytest.raises(ValueError):
        entropy_estimate(shift2, [], [Fraction(1, 2)])
    with pytest.raises(ValueError):
        entropy_estimate(shift2, [0, 1], [Fraction(1, 2)])
    with pytest.raises(ValueError):
        entropy_estimate(shift2, [1], [Fraction(1, 2)], mode="nope")


def test_box_dimension(shift2):
    report = box_dimension_estimate(shift2, eps_grid(shift2, range(1, 9)))
    assert report.single_log[0].upper == pytest.approx(1.0)
    assert report.reference == pytest.approx(1.0)


def test_box_dimension_needs_small_scales(shift2):
    with pytest.raises(ValueError):
        box_dimension_estimate(shift2, [Fraction(1)])


def test_metric_order_of_points(shift2):
    report = metric_order_estimate(shift2, eps_grid(shift2, range(2, 6)), space="points")
    assert report.single_log[0].upper == pytest.approx(1.0)
    assert report.double_log == []


def test_metric_order_of_the_hyperspace(shift2):
    report = metric_order_estimate(shift2, [Fraction(1, 8), Fraction(1, 16)], samples=10)

    finest = min(report.cells, key=lambda cell: cell.eps)
    assert finest.upper == 2**32
    assert finest.lower >= 2
    assert report.sandwich["epsilon"] == "1/16"
    assert report.sandwich["dimension"] == pytest.approx(1.0)
    assert report.sandwich["contains"]
    assert report.sandwich["lower"] == pytest.approx(finest.double_log_lower / finest.scale)
    assert report.sandwich["base_lower"] == pytest.approx(finest.log_base / finest.scale)


def test_metric_order_unknown_space(shift2):
    with pytest.raises(ValueError):
        metric_order_estimate(shift2, [Fraction(1, 4)], space="nope")


def test_measure_space_lower_rate(shift2):
    report = measure_space_entropy_order(shift2, range(1, 4), [Fraction(1, 2)], samples=2)

    fit = report.double_log[0]
    # the fitted cells are n = 2, 3 with apart families of size 2^n
    assert fit.base_rate == pytest.approx(math.log(2))
    assert fit.liminf <= fit.base_rate
    assert report.summary()["double_log"][0]["base_rate"] == fit.base_rate
    for cell in report.cells:
        assert cell.base == 2**cell.n
        assert cell.double_log_lower == loglog(cell.log_lower)
        assert cell.log_upper <= cell.bound_log


def test_measure_space_falls_back_to_the_closed_form_bound(shift2):
    report = measure_space_entropy_order(shift2, [1], [Fraction(1, 2)], samples=2, caps=Caps(grid=10))

    (cell,) = report.cells
    assert cell.upper is None
    assert cell.log_upper == pytest.approx(bolley_log_bound(shift2, 1, Fraction(1, 2)))
    assert cell.log_upper == cell.bound_log


def test_metric_order_of_measures_falls_back_to_the_closed_form_bound(shift2):
    report = metric_order_estimate(shift2, [Fraction(1, 2)], space="measures", samples=2, caps=Caps(grid=10))

    (cell,) = report.cells
    assert cell.upper is None
    assert cell.log_upper == pytest.approx(bolley_log_bound(shift2, 1, Fraction(1, 2)))
    assert cell.lower <= math.exp(cell.log_upper)


def test_hyperspace_entropy_order(shift2):
    report = hyperspace_entropy_order(shift2, range(1, 3), [Fraction(1, 4)], samples=5)

    first, second = sorted(report.cells, key=lambda cell: cell.n)
    assert (first.base, second.base) == (4, 8)
    # a base of 4 words is too small for a code
    assert first.lower == 1
    assert first.double_log_lower == 0
    assert second.lower > 1
    assert second.upper == 2 ** power_set_cover(shift2, 2, Fraction(1, 4), samples=5).size
    assert second.lower <= second.upper
    assert report.double_log[0].base_rate == pytest.approx(math.log(8) / 2)


def test_hyperspace_order_respects_the_enumeration_cap(shift2):
    with pytest.raises(errors.ResourceLimitError):
        hyperspace_entropy_order(shift2, [2], [Fraction(1, 4)], samples=1, caps=Caps(enumeration=4))


def test_ensemble_weights_must_sum_to_one(fixed_points):
    with pytest.raises(errors.MalformedSpecError):
        MeasureEnsemble(((fixed_points[0], Fraction(1, 2)),))


def test_ensemble_barycenter(shift2, fixed_points):
    ensemble = MeasureEnsemble.uniform(fixed_points)
    assert ensemble.barycenter() == DiscreteMeasure.uniform(shift2, ["0000", "1111"])
    assert len(ensemble) == 2


def test_mixture_candidates(fixed_points):
    candidates = mixture_candidates(fixed_points, grid=4)
    assert len(candidates) == 5
    assert candidates[:2] == fixed_points


def test_quantization_of_one_measure(shift2):
    single = MeasureEnsemble(((periodic_orbit_measure("01", shift2, resolution=4), Fraction(1)),))
    result = quantization(single, 2, Fraction(1, 8))

    assert result.count == 1
    assert result.cost == 0
    assert result.exact


def test_quantization_of_two_separated_measures(fixed_points):
    result = quantization(MeasureEnsemble.uniform(fixed_points), 2, Fraction(1, 8))

    assert result.count == 2
    assert result.lower == 2
    assert result.strategy == EXHAUSTIVE
    assert set(result.codebook) == set(fixed_points)


def test_coarse_quantization_uses_a_mixture(fixed_points):
    result = quantization(MeasureEnsemble.uniform(fixed_points), 2, Fraction(1, 2))
    assert result.count == 1
    assert result.cost == Fraction(1, 2)


def test_quantization_lower_bound(fixed_points):
    ensemble = MeasureEnsemble.uniform(fixed_points)
    assert quantization_lower_bound(ensemble, 2, Fraction(1, 8)) == 2
    assert quantization_lower_bound(ensemble, 2, Fraction(1, 4)) == 1


def test_ergodic_measure_has_trivial_emergence(shift2):
    ergodic = MeasureEnsemble(((periodic_orbit_measure("01", shift2, resolution=4), Fraction(1)),))
    report = measure_emergence(ergodic, range(1, 4), [Fraction(1, 8)])
    assert all(cell.upper == 1 for cell in report.cells)


def test_emergence_needs_invariant_atoms(dirac):
    with pytest.raises(errors.MalformedSpecError):
        measure_emergence(MeasureEnsemble(((dirac("01"), Fraction(1)),)), [1], [Fraction(1, 4)])


def test_pointwise_emergence(fixed_points):
    assert pointwise_emergence(fixed_points, None, Fraction(1, 2)) == CountBracket(lower=1, upper=1, exact=1)
    assert pointwise_emergence(fixed_points, None, Fraction(1, 4)) == CountBracket(lower=2, upper=2, exact=2)
    assert pointwise_emergence(fixed_points, 2, Fraction(1, 4)) == CountBracket(lower=2, upper=2, exact=2)
    assert pointwise_emergence(fixed_points[:1], 2, Fraction(1, 4)) == CountBracket(lower=1, upper=1, exact=1)


def test_pointwise_bracket_cell(fixed_points):
    cell = bracket_cell(None, Fraction(1, 4), pointwise_emergence(fixed_points, None, Fraction(1, 4)))
    assert (cell.n, cell.lower, cell.upper) == (1, 2, 2)
    assert cell.log_lower == pytest.approx(math.log(2))


def test_pointwise_emergence_needs_measures():
    with pytest.raises(errors.MalformedSpecError):
        pointwise_emergence([], None, Fraction(1, 2))


def test_variational_bound(shift2):
    decomposition = MeasureEnsemble.uniform(
        [periodic_orbit_measure(word, shift2, resolution=4) for word in ("0", "1", "01")]
    )
    grid = ([2, 3], [Fraction(1, 4)])
    emergence_report = measure_emergence(decomposition, *grid)
    order = measure_space_entropy_order(shift2, *grid, samples=2)

    assert check_variational_bound(emergence_report, order) == 2
    with pytest.raises(errors.VerificationError):
        check_variational_bound(order, emergence_report)
