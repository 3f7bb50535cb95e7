"""Scaling estimators: topological entropy, entropy orders of the induced systems, metric order,
box dimension, quantization numbers, measure emergence and pointwise emergence.

Limits are replaced by finite grids. Every cell carries certified lower and upper counts, and
slopes are least-squares fits over the top half of the horizon range, reported with the raw cells.
"""

from __future__ import annotations

import itertools
import logging
import math
import typing
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from emergence_lab import certificates, counting, utils
from emergence_lab.config import Caps
from emergence_lab.errors import MalformedSpecError, ResourceLimitError, VerificationError
from emergence_lab.measures import DiscreteMeasure, ultrametric_wasserstein
from emergence_lab.systems import SymbolicSystem

logger = logging.getLogger(__name__)

# counts above this are only kept through their logarithm
EXACT_COUNT_LIMIT = 2**64

T = typing.TypeVar("T")


def loglog(log_count: float) -> float:
    """log log of a count given its log; counts <= 1 map to 0 (the log 0 = 0 convention, extended)."""
    if log_count <= 0:
        return 0.0
    return math.log(log_count)


def eps_grid(system: SymbolicSystem, exponents: typing.Iterable[int]) -> typing.List[Fraction]:
    """Scales λ^k for the given exponents, from coarse to fine."""
    return [system.power(k) for k in sorted(set(exponents))]


@dataclass(frozen=True)
class ScalingCell:
    """One (n, eps) cell.

    Args:
        n: Horizon (1 for static counts)
        eps: Scale
        lower: Certified lower count, None when only its log is tracked
        upper: Certified upper count, None when only its log is tracked
        log_lower: log of the lower count
        log_upper: log of the upper count
        base: Size of the verified apart, separated or split family behind the lower count, reported
            as its own rate beside the certified one
        bound_log: log of the closed-form upper bound on the count, when one applies
    """

    n: int
    eps: Fraction
    lower: typing.Optional[int]
    upper: typing.Optional[int]
    log_lower: float
    log_upper: float
    base: typing.Optional[int] = None
    bound_log: typing.Optional[float] = None

    @property
    def double_log_lower(self) -> float:
        return loglog(self.log_lower)

    @property
    def log_base(self) -> typing.Optional[float]:
        """log of the base family size, which the double log of the lower count tracks up to a constant."""
        if self.base is None:
            return None
        return math.log(self.base) if self.base > 1 else 0.0

    @property
    def double_log_upper(self) -> float:
        return loglog(self.log_upper)

    @property
    def scale(self) -> float:
        """-log eps, the abscissa of the static (metric order and dimension) fits."""
        return -math.log(self.eps)


def _cell(
    n: int,
    eps: Fraction,
    lower: int,
    upper: typing.Optional[int] = None,
    log_upper: typing.Optional[float] = None,
    **extra: typing.Any,
) -> ScalingCell:
    if upper is not None:
        log_upper = math.log(upper)
    if upper is not None and upper > EXACT_COUNT_LIMIT:
        upper = None
    return ScalingCell(
        n=n,
        eps=Fraction(eps),
        lower=lower,
        upper=upper,
        log_lower=math.log(lower) if lower > 0 else 0.0,
        log_upper=typing.cast(float, log_upper),
        **extra,
    )


@dataclass(frozen=True)
class SlopeFit:
    """Slopes of the lower and upper series at one scale, with the liminf/limsup ratios beside them.

    Args:
        eps: The scale, None for static fits over the whole grid
        lower: Least-squares slope of the lower series
        upper: Least-squares slope of the upper series
        liminf: Smallest lower ratio over the fitted cells
        limsup: Largest upper ratio over the fitted cells
        exact_ratio: Common ratio of consecutive counts when both series are exactly geometric
        base_rate: Smallest log(base) ratio over the fitted cells, when the cells carry a base family
    """

    eps: typing.Optional[Fraction]
    lower: float
    upper: float
    liminf: float
    limsup: float
    exact_ratio: typing.Optional[Fraction] = None
    base_rate: typing.Optional[float] = None

    @property
    def exact_slope(self) -> typing.Optional[float]:
        return None if self.exact_ratio is None else math.log(self.exact_ratio)

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        return {
            "epsilon": None if self.eps is None else utils.format_rational(self.eps),
            "lower": self.lower,
            "upper": self.upper,
            "liminf": self.liminf,
            "limsup": self.limsup,
            "exact_ratio": None if self.exact_ratio is None else utils.format_rational(self.exact_ratio),
            "base_rate": self.base_rate,
        }


@dataclass
class ScalingReport:
    """Cells of a scaling run and the slopes fitted on them.

    `single_log` fits log(count) and `double_log` fits log log(count), against n for the
    dynamical modes and against -log eps for the static ones.
    """

    mode: str
    system: SymbolicSystem
    cells: typing.List[ScalingCell]
    single_log: typing.List[SlopeFit]
    double_log: typing.List[SlopeFit]
    reference: typing.Optional[float] = None
    sandwich: typing.Optional[typing.Dict[str, typing.Any]] = None
    conventions: typing.Dict[str, typing.Any] = field(default_factory=dict)

    @property
    def is_static(self) -> bool:
        return self.mode in (utils.METRIC_ORDER, utils.BOX_DIMENSION)

    @property
    def eps_trend(self) -> typing.List[typing.Tuple[Fraction, float, float]]:
        """Per-scale (eps, lower, upper) of the primary rate, from coarse to fine."""
        if self.is_static:
            double = self.mode == utils.METRIC_ORDER
            trend = []
            for cell in sorted(self.cells, key=lambda c: c.eps, reverse=True):
                lower = cell.double_log_lower if double else cell.log_lower
                upper = cell.double_log_upper if double else cell.log_upper
                trend.append((cell.eps, lower / cell.scale, upper / cell.scale))
            return trend
        fits = self.single_log if self.mode == utils.ENTROPY else self.double_log
        ordered = sorted(fits, key=lambda fit: typing.cast(Fraction, fit.eps), reverse=True)
        return [(typing.cast(Fraction, fit.eps), fit.lower, fit.upper) for fit in ordered]

    def summary(self) -> typing.Dict[str, typing.Any]:
        return {
            "mode": self.mode,
            "system": self.system.to_dict(),
            "single_log": [fit.to_dict() for fit in self.single_log],
            "double_log": [fit.to_dict() for fit in self.double_log],
            "eps_trend": [
                {"epsilon": utils.format_rational(eps), "lower": lower, "upper": upper}
                for eps, lower, upper in self.eps_trend
            ],
            "reference": self.reference,
            "sandwich": self.sandwich,
            "conventions": self.conventions,
        }


def _top_half(cells: typing.Sequence[ScalingCell]) -> typing.List[ScalingCell]:
    ordered = sorted(cells, key=lambda cell: cell.n)
    if len(ordered) < 2:
        return ordered
    keep = max(2, math.ceil(len(ordered) / 2))
    return ordered[-keep:]


def _slope(xs: typing.Sequence[float], ys: typing.Sequence[float]) -> float:
    if len(set(xs)) < 2:
        return ys[-1] / xs[-1] if xs and xs[-1] else 0.0
    return float(np.polyfit(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float), 1)[0])


def _geometric_ratio(
    counts: typing.Sequence[typing.Optional[int]], ns: typing.Sequence[int]
) -> typing.Optional[Fraction]:
    if len(counts) < 2 or any(count is None or count <= 0 for count in counts):
        return None
    if any(b - a != 1 for a, b in zip(ns, ns[1:])):
        return None
    ratios = {Fraction(typing.cast(int, b), typing.cast(int, a)) for a, b in zip(counts, counts[1:])}
    return ratios.pop() if len(ratios) == 1 else None


def _base_rate(
    cells: typing.Sequence[ScalingCell], abscissa: typing.Callable[[ScalingCell], float]
) -> typing.Optional[float]:
    rates = []
    for cell in cells:
        log_base, x = cell.log_base, abscissa(cell)
        if log_base is None or not x:
            return None
        rates.append(log_base / x)
    return min(rates) if rates else None


def _dynamical_fits(cells: typing.Sequence[ScalingCell], double: bool) -> typing.List[SlopeFit]:
    fits = []
    for eps in sorted({cell.eps for cell in cells}, reverse=True):
        fitted = _top_half([cell for cell in cells if cell.eps == eps])
        ns = [cell.n for cell in fitted]
        if double:
            lower = [cell.double_log_lower for cell in fitted]
            upper = [cell.double_log_upper for cell in fitted]
            ratio = None
        else:
            lower = [cell.log_lower for cell in fitted]
            upper = [cell.log_upper for cell in fitted]
            lower_ratio = _geometric_ratio([cell.lower for cell in fitted], ns)
            upper_ratio = _geometric_ratio([cell.upper for cell in fitted], ns)
            ratio = lower_ratio if lower_ratio is not None and lower_ratio == upper_ratio else None
        fits.append(
            SlopeFit(
                eps=eps,
                lower=_slope(ns, lower),
                upper=_slope(ns, upper),
                liminf=min(value / n for value, n in zip(lower, ns)),
                limsup=max(value / n for value, n in zip(upper, ns)),
                exact_ratio=ratio,
                base_rate=_base_rate(fitted, lambda cell: cell.n) if double else None,
            )
        )
    return fits


def _static_fit(cells: typing.Sequence[ScalingCell], double: bool) -> SlopeFit:
    ordered = sorted(cells, key=lambda cell: cell.eps, reverse=True)
    xs = [cell.scale for cell in ordered]
    lower = [cell.double_log_lower if double else cell.log_lower for cell in ordered]
    upper = [cell.double_log_upper if double else cell.log_upper for cell in ordered]
    return SlopeFit(
        eps=None,
        lower=_slope(xs, lower),
        upper=_slope(xs, upper),
        liminf=min(value / x for value, x in zip(lower, xs)),
        limsup=max(value / x for value, x in zip(upper, xs)),
        base_rate=_base_rate(ordered, lambda cell: cell.scale) if double else None,
    )


def _run_cells(
    task: typing.Callable[[int, Fraction], T],
    grid: typing.Sequence[typing.Tuple[int, Fraction]],
    workers: int,
) -> typing.List[T]:
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda cell: task(*cell), grid))
    return [task(n, eps) for n, eps in grid]


def _grid(
    n_range: typing.Iterable[int], eps_values: typing.Iterable[Fraction]
) -> typing.List[typing.Tuple[int, Fraction]]:
    ns = sorted(set(n_range))
    scales = sorted({Fraction(eps) for eps in eps_values}, reverse=True)
    if not ns or not scales:
        raise ValueError("the n range and the epsilon grid must be nonempty")
    if ns[0] < 1:
        raise ValueError(f"horizons must be positive, got {ns[0]}")
    if any(not 0 < eps for eps in scales):
        raise ValueError("epsilon values must be positive")
    return [(n, eps) for eps in scales for n in ns]


def entropy_estimate(
    system: SymbolicSystem,
    n_range: typing.Iterable[int],
    eps_values: typing.Iterable[Fraction],
    mode: str = utils.BOWEN,
    seed: int = 0,
    restarts: int = utils.DEFAULT_RESTARTS,
    strategy: str = utils.GREEDY,
    caps: typing.Optional[Caps] = None,
    workers: int = 1,
) -> ScalingReport:
    """h_top from the (n, eps) spanning and separated counts.

    In `bowen` mode the counts come from the transfer-matrix oracle: upper N(f, n, eps) with the
    strict convention, lower S(f, n, 2 eps) <= N(f, n, eps). In `mean` mode they are packings and
    covers of the cylinders under the mean metric, greedy or exact per `strategy`, within `caps`.

    !!! Example
        ```python
        from fractions import Fraction

        from emergence_lab.emergence import entropy_estimate
        from emergence_lab.systems import full_shift

        report = entropy_estimate(full_shift(2), range(2, 11), [Fraction(1, 4)])
        report.single_log[0].exact_ratio  # Fraction(2, 1)
        ```
    """
    if mode not in utils.VALID_MODES:
        raise ValueError(f"mode must be one of {utils.VALID_MODES}, got {mode!r}")
    if strategy not in utils.VALID_STRATEGIES:
        raise ValueError(f"strategy must be one of {utils.VALID_STRATEGIES}, got {strategy!r}")
    limits = caps or Caps()
    grid = _grid(n_range, eps_values)

    def bowen_cell(n: int, eps: Fraction) -> ScalingCell:
        return _cell(n, eps, lower=system.separated_count(n, 2 * eps), upper=system.spanning_count(n, eps))

    def mean_cell(n: int, eps: Fraction) -> ScalingCell:
        length = max(n, system.ball_depth(n, eps, strict=True))
        view = counting.point_view(system, length, n=n, mode=utils.MEAN, cap=limits.enumeration)
        lower = counting.packing_count(
            view, 2 * eps, strategy=strategy, restarts=restarts, seed=seed, cap=limits.exact
        )
        upper = counting.covering_count(view, eps, strategy=strategy, cap=limits.exact)
        return _cell(n, eps, lower=lower.count, upper=upper.count)

    cells = _run_cells(bowen_cell if mode == utils.BOWEN else mean_cell, grid, workers)
    logger.info(f"Entropy estimate ({mode}): {len(cells)} cells")
    return ScalingReport(
        mode=utils.ENTROPY,
        system=system,
        cells=cells,
        single_log=_dynamical_fits(cells, double=False),
        double_log=_dynamical_fits(cells, double=True),
        reference=system.topological_entropy(),
        conventions={
            "metric": mode,
            "strategy": strategy if mode == utils.MEAN else "oracle",
            "spanning": "strict",
            "separation": "strict",
            "lower_scale": "2 eps",
        },
    )


def bolley_log_bound(system: SymbolicSystem, n: int, eps: Fraction) -> float:
    """log of (8e diam / eps)^N̄(f, n, eps/2), the closed-form bound on N_M(n, eps) for W_1^n."""
    eps = Fraction(eps)
    return system.closed_ball_count(n, eps / 2) * math.log(8 * math.e * float(system.diameter / eps))


def _hamming_size(base: certificates.Certificate, seed: int, caps: Caps) -> typing.Optional[int]:
    length = certificates.code_length(base.size, caps.code)
    if length < 8:
        return None
    code = certificates.build_half_weight_code(length, seed=seed, limit=caps.code_limit)
    family = certificates.hamming_measure_family(base, code, seed=seed)
    return family.size


def _hyperspace_lower(
    system: SymbolicSystem, words: typing.Sequence[str], n: int, eps: Fraction, seed: int, caps: Caps
) -> int:
    length = certificates.code_length(len(words), caps.code)
    if length < 8:
        return 1
    code = certificates.build_half_weight_code(length, seed=seed, limit=caps.code_limit)
    return certificates.hyperspace_family(system, words, code, n, eps, seed=seed).size


def _bolley_upper(
    system: SymbolicSystem, n: int, eps: Fraction, samples: int, seed: int, caps: Caps
) -> typing.Tuple[typing.Optional[int], float]:
    """Size and log size of the Bolley family, or the closed-form bound when it exceeds the caps."""
    try:
        cover = counting.bolley_cover(
            system, eps, p=1, n=n, samples=samples, seed=seed, enumeration_cap=caps.enumeration, grid_cap=caps.grid
        )
    except ResourceLimitError as err:
        logger.warning(f"Bolley family at n={n}, eps={eps} not built ({err}); using the closed-form bound")
        return None, bolley_log_bound(system, n, eps)
    return cover.family_size, cover.log_family_size


def measure_space_entropy_order(
    system: SymbolicSystem,
    n_range: typing.Iterable[int],
    eps_values: typing.Iterable[Fraction],
    route: str = utils.DEFAULT_ROUTE,
    samples: int = 20,
    seed: int = 0,
    caps: typing.Optional[Caps] = None,
    workers: int = 1,
) -> ScalingReport:
    """Entropy order of f_M: double-log growth of N_M(n, eps) under W_1^n.

    Upper cells come from the Bolley spanning family at scale eps (checked on `samples` random
    measures), with the closed-form bound log N̄(f, n, eps/2) + log log(8e/eps) beside them. When the
    family cannot be built within the caps the closed-form bound stands in for it.

    Lower cells come from a verified apart family (Diracs on separated words, or periodic-orbit
    measures for the invariant route) and the verified Hamming family built on it. The apart size A
    is kept on each cell and log A / n is reported as the `base_rate` of the double-log fits.
    """
    limits = caps or Caps()
    grid = _grid(n_range, eps_values)

    def task(n: int, eps: Fraction) -> ScalingCell:
        gap = system.specification_gap() if route == utils.PERIODIC else 0
        # the periodic family is apart at n + gap, so it is built one gap earlier
        cell_route = route if n - gap >= 1 else utils.DIRAC
        base = certificates.apart_measure_family(
            system, max(1, n - gap), eps, route=cell_route, seed=seed, enumeration_cap=limits.enumeration
        )
        hamming = _hamming_size(base, seed, limits)

        upper, log_upper = _bolley_upper(system, n, eps, samples, seed, limits)
        lower = hamming if hamming is not None else base.size
        bound_log = bolley_log_bound(system, n, eps)
        return _cell(n, eps, lower=lower, upper=upper, log_upper=log_upper, base=base.size, bound_log=bound_log)

    cells = _run_cells(task, grid, workers)
    logger.info(f"Measure-space entropy order ({route}): {len(cells)} cells")
    return ScalingReport(
        mode=utils.ENTROPY_ORDER,
        system=system,
        cells=cells,
        single_log=_dynamical_fits(cells, double=False),
        double_log=_dynamical_fits(cells, double=True),
        reference=system.topological_entropy(),
        conventions={
            "space": "measures",
            "route": route,
            "metric": "W1n",
            "spanning": "closed",
            "lower_double_log": "certified count",
            "base_rate": "log apart size / n",
        },
    )


def hyperspace_entropy_order(
    system: SymbolicSystem,
    n_range: typing.Iterable[int],
    eps_values: typing.Iterable[Fraction],
    samples: int = 50,
    seed: int = 0,
    caps: typing.Optional[Caps] = None,
    workers: int = 1,
) -> ScalingReport:
    """Entropy order of f_K: double-log growth of N_K(n, eps) under H^n.

    Upper cells are 2^N(f, n, eps) from the power-set cover (checked on `samples` random closed
    sets). Lower cells are verified B_φ families over a maximum separated word family of size S,
    and log S / n is reported beside them as the `base_rate`.
    """
    limits = caps or Caps()
    grid = _grid(n_range, eps_values)

    def task(n: int, eps: Fraction) -> ScalingCell:
        cover = counting.power_set_cover(
            system, n, eps, samples=samples, seed=seed, enumeration_cap=limits.enumeration
        )
        words = certificates.separated_words(system, n, eps, cap=limits.enumeration)
        lower = _hyperspace_lower(system, words, n, eps, seed, limits)
        upper = 2**cover.size if cover.size <= 64 else None
        return _cell(n, eps, lower=lower, upper=upper, log_upper=cover.log_family_size, base=len(words))

    cells = _run_cells(task, grid, workers)
    logger.info(f"Hyperspace entropy order: {len(cells)} cells")
    return ScalingReport(
        mode=utils.ENTROPY_ORDER,
        system=system,
        cells=cells,
        single_log=_dynamical_fits(cells, double=False),
        double_log=_dynamical_fits(cells, double=True),
        reference=system.topological_entropy(),
        conventions={
            "space": "hyperspace",
            "metric": "Hn",
            "spanning": "closed",
            "lower_double_log": "certified count",
            "base_rate": "log S / n",
        },
    )


def box_dimension_estimate(system: SymbolicSystem, eps_values: typing.Iterable[Fraction]) -> ScalingReport:
    """dim(X, d): slope of log N(X, eps) against -log eps, bracketed below by S(X, 2 eps)."""
    cells = []
    for _, eps in _grid([1], eps_values):
        if eps >= system.diameter:
            raise ValueError(f"epsilon must be below the diameter, got {eps}")
        cells.append(_cell(1, eps, lower=system.separated_count(1, 2 * eps), upper=system.spanning_count(1, eps)))
    fit = _static_fit(cells, double=False)
    return ScalingReport(
        mode=utils.BOX_DIMENSION,
        system=system,
        cells=cells,
        single_log=[fit],
        double_log=[],
        reference=system.topological_entropy() / -math.log(system.lam),
        conventions={"spanning": "strict", "lower_scale": "2 eps"},
    )


def metric_order_estimate(
    system: SymbolicSystem,
    eps_values: typing.Iterable[Fraction],
    space: str = "hyperspace",
    samples: int = 50,
    seed: int = 0,
    caps: typing.Optional[Caps] = None,
) -> ScalingReport:
    """mo of X, K(X) or M(X): log log N(eps) / -log eps on a static grid.

    For `hyperspace` the upper count is 2^N(X, eps) (power-set cover) and the lower count the
    verified B_φ packing, whose size is of order 2^(S(X, eps) - 7); the report carries the
    dim <= mo(K(X)) <= dim sandwich at the finest scale. For `measures` the upper count is the
    Bolley family and the lower one the Hamming family over separated Diracs.
    """
    if space not in ("points", "hyperspace", "measures"):
        raise ValueError(f"space must be points, hyperspace or measures, got {space!r}")
    limits = caps or Caps()
    dimension = box_dimension_estimate(system, eps_values)
    cells = []
    for _, eps in _grid([1], eps_values):
        if space == "points":
            cell = _cell(1, eps, lower=system.separated_count(1, 2 * eps), upper=system.spanning_count(1, eps))
        elif space == "hyperspace":
            cover = counting.power_set_cover(
                system, 1, eps, samples=samples, seed=seed, enumeration_cap=limits.enumeration
            )
            words = certificates.separated_words(system, 1, eps, cap=limits.enumeration)
            lower = _hyperspace_lower(system, words, 1, eps, seed, limits)
            upper = 2**cover.size if cover.size <= 64 else None
            # S separated points support packings of size about 2^(S - 7)
            excess = len(words) - 7
            cell = _cell(
                1,
                eps,
                lower=lower,
                upper=upper,
                log_upper=cover.log_family_size,
                base=excess if excess > 1 else None,
            )
        else:
            base = certificates.apart_measure_family(
                system, 1, eps, route=utils.DIRAC, seed=seed, enumeration_cap=limits.enumeration
            )
            lower = _hamming_size(base, seed, limits) or base.size
            upper, log_upper = _bolley_upper(system, 1, eps, samples, seed, limits)
            cell = _cell(1, eps, lower=lower, upper=upper, log_upper=log_upper, base=base.size)
        cells.append(cell)

    double = space != "points"
    report = ScalingReport(
        mode=utils.METRIC_ORDER,
        system=system,
        cells=cells,
        single_log=[_static_fit(cells, double=False)],
        double_log=[_static_fit(cells, double=True)] if double else [],
        reference=dimension.single_log[0].upper,
        conventions={"space": space, "abscissa": "-log eps", "lower_double_log": "certified count"},
    )
    if space == "hyperspace":
        finest = min(cells, key=lambda cell: cell.eps)
        dim = dimension.single_log[0].upper
        lower_ratio = finest.double_log_lower / finest.scale
        upper_ratio = finest.double_log_upper / finest.scale
        report.sandwich = {
            "epsilon": utils.format_rational(finest.eps),
            "dimension": dim,
            "lower": lower_ratio,
            "upper": upper_ratio,
            "contains": lower_ratio <= dim <= upper_ratio,
            "base_lower": None if finest.log_base is None else finest.log_base / finest.scale,
        }
    logger.info(f"Metric order ({space}): {len(cells)} scales")
    return report


@dataclass(frozen=True)
class MeasureEnsemble:
    """A finitely supported ω in M(M(X)): measures with positive weights summing to 1.

    Args:
        atoms: Pairs of measure and weight
    """

    atoms: typing.Tuple[typing.Tuple[DiscreteMeasure, Fraction], ...]

    def __post_init__(self) -> None:
        merged: typing.Dict[DiscreteMeasure, Fraction] = {}
        for measure, raw in self.atoms:
            weight = Fraction(raw)
            if weight < 0:
                raise MalformedSpecError(f"negative ensemble weight {weight}")
            merged[measure] = merged.get(measure, Fraction(0)) + weight
        if not merged:
            raise MalformedSpecError("an ensemble needs at least one measure")
        if sum(merged.values()) != 1:
            raise MalformedSpecError(f"ensemble weights sum to {sum(merged.values())}, expected 1")
        systems = {measure.system for measure in merged}
        if len(systems) != 1:
            raise MalformedSpecError("ensemble measures belong to different systems")
        object.__setattr__(self, "atoms", tuple((m, w) for m, w in merged.items() if w > 0))

    @classmethod
    def uniform(cls, family: typing.Sequence[DiscreteMeasure]) -> MeasureEnsemble:
        return cls(tuple((measure, Fraction(1, len(family))) for measure in family))

    @property
    def measures(self) -> typing.List[DiscreteMeasure]:
        return [measure for measure, _ in self.atoms]

    @property
    def weights(self) -> typing.List[Fraction]:
        return [weight for _, weight in self.atoms]

    def barycenter(self) -> DiscreteMeasure:
        """μ = ∫ η dω(η), the measure this ensemble decomposes."""
        return DiscreteMeasure.mix(self.measures, self.weights)

    def __len__(self) -> int:
        return len(self.atoms)


@dataclass(frozen=True)
class Quantization:
    """Q(ω, n, eps) with its codebook.

    Args:
        count: Size of the codebook found
        codebook: Measures of the codebook
        cost: ∫ W_1^n(μ, codebook) dω(μ)
        lower: Certified lower bound on Q from the pairwise separation of the atoms
        strategy: `exhaustive` when every codebook of smaller size over the candidates was ruled out
    """

    count: int
    codebook: typing.Tuple[DiscreteMeasure, ...]
    cost: Fraction
    lower: int
    strategy: str

    @property
    def exact(self) -> bool:
        return self.count == self.lower


EXHAUSTIVE = "exhaustive"


def mixture_candidates(family: typing.Sequence[DiscreteMeasure], grid: int = 4) -> typing.List[DiscreteMeasure]:
    """The family and its pairwise barycentric mixtures with weights on the 1/grid simplex grid."""
    candidates = list(dict.fromkeys(family))
    for left, right in itertools.combinations(list(dict.fromkeys(family)), 2):
        for step in range(1, grid):
            candidates.append(DiscreteMeasure.mix([left, right], [Fraction(step, grid), Fraction(grid - step, grid)]))
    return list(dict.fromkeys(candidates))


def _transport_cost(mu: DiscreteMeasure, nu: DiscreteMeasure, n: int) -> Fraction:
    return ultrametric_wasserstein(mu, nu, 1, n).cost


def quantization_lower_bound(ensemble: MeasureEnsemble, n: int, eps: Fraction) -> int:
    """Smallest k with (1 - heaviest k weights) · δ/2 <= eps, δ the least W_1^n between atoms.

    A codebook point lies within less than δ/2 of at most one atom, so any k-codebook leaves
    the other atoms, of total weight at least 1 - (heaviest k), at cost >= δ/2.
    """
    measures = ensemble.measures
    if len(measures) == 1:
        return 1
    delta = min(_transport_cost(a, b, n) for a, b in itertools.combinations(measures, 2))
    ordered = sorted(ensemble.weights, reverse=True)
    for k in range(1, len(ordered) + 1):
        if (1 - sum(ordered[:k], Fraction(0))) * delta / 2 <= eps:
            return k
    return len(ordered)


def quantization(
    ensemble: MeasureEnsemble,
    n: int,
    eps: Fraction,
    grid: int = 4,
    exhaustive_size: int = 3,
    cap: int = utils.EXACT_CAP * 10,
) -> Quantization:
    """Q(ω, n, eps): the smallest codebook F with ∫ W_1^n(μ, F) dω(μ) <= eps.

    Codebooks are drawn from the atoms and their pairwise mixtures on the 1/grid simplex grid.
    Sizes up to `exhaustive_size` are searched exhaustively; beyond that a greedy k-median adds
    the candidate that lowers the cost most, and the atoms' own cover is kept when it is smaller.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError(f"epsilon must be positive, got {eps}")
    measures = ensemble.measures
    weights = ensemble.weights
    candidates = mixture_candidates(measures, grid)
    if len(candidates) > cap:
        candidates = list(measures)
        logger.warning(f"Quantization candidates capped at the {len(measures)} atoms")
    costs = [[_transport_cost(measure, candidate, n) for measure in measures] for candidate in candidates]
    lower = quantization_lower_bound(ensemble, n, eps)

    def cost_of(chosen: typing.Sequence[int]) -> Fraction:
        return sum(
            (weight * min(costs[c][i] for c in chosen) for i, weight in enumerate(weights)),
            Fraction(0),
        )

    def result(chosen: typing.Sequence[int], strategy: str) -> Quantization:
        return Quantization(
            count=len(chosen),
            codebook=tuple(candidates[c] for c in chosen),
            cost=cost_of(chosen),
            lower=lower,
            strategy=strategy,
        )

    for size in range(1, min(exhaustive_size, len(candidates)) + 1):
        best = min(itertools.combinations(range(len(candidates)), size), key=cost_of)
        if cost_of(best) <= eps:
            return result(best, EXHAUSTIVE)

    chosen: typing.List[int] = []
    while not chosen or cost_of(chosen) > eps:
        remaining = [c for c in range(len(candidates)) if c not in chosen]
        chosen.append(min(remaining, key=lambda c: cost_of(chosen + [c])))

    view = counting.measure_view(measures, n=n)
    cover = counting.covering_count(view, eps, candidates=candidates, strict=False)
    if cover.count < len(chosen):
        chosen = list(cover.witness)
    return result(chosen, utils.GREEDY)


def measure_emergence(
    ensemble: MeasureEnsemble,
    n_range: typing.Iterable[int],
    eps_values: typing.Iterable[Fraction],
    grid: int = 4,
    workers: int = 1,
) -> ScalingReport:
    """E_μ(n, eps) = Q(ω, n, eps) for μ with ergodic decomposition ω, on the (n, eps) grid.

    Raises:
        MalformedSpecError: when an atom of the decomposition is not invariant.
    """
    for index, measure in enumerate(ensemble.measures):
        if measure.resolution < 2 or not measure.is_invariant():
            raise MalformedSpecError(f"decomposition atom {index} is not an invariant measure")
    cells_grid = _grid(n_range, eps_values)

    def task(n: int, eps: Fraction) -> ScalingCell:
        result = quantization(ensemble, n, eps, grid=grid)
        return _cell(n, eps, lower=result.lower, upper=result.count)

    cells = _run_cells(task, cells_grid, workers)
    system = ensemble.measures[0].system
    return ScalingReport(
        mode=utils.ENTROPY_ORDER,
        system=system,
        cells=cells,
        single_log=_dynamical_fits(cells, double=False),
        double_log=_dynamical_fits(cells, double=True),
        conventions={"quantity": "measure emergence", "atoms": len(ensemble)},
    )


def pointwise_emergence(
    vx: typing.Sequence[DiscreteMeasure], n: typing.Optional[int], eps: Fraction, grid: int = 4
) -> counting.CountBracket:
    """E_x(n, eps) = N_M(V(x), n, eps): closed W_1^n cover of V(x) by V(x) and its mixtures.

    With `n` None the static E_x(eps) under W_1 is computed. The lower end is a 2 eps-separated
    subfamily of V(x), no two of which share a centre within eps.

    Raises:
        MalformedSpecError: when V(x) is empty.
    """
    if not vx:
        raise MalformedSpecError("V(x) must contain at least one measure")
    eps = Fraction(eps)
    family = list(dict.fromkeys(vx))
    if n is None:
        view = counting.measure_view(family, distance=utils.W1)
    else:
        view = counting.measure_view(family, n=n)
    cover = counting.covering_count(view, eps, candidates=mixture_candidates(family, grid), strict=False)
    packing = counting.packing_count(view, 2 * eps, restarts=0)
    exact = cover.count if packing.count == cover.count or cover.exact else None
    return counting.CountBracket(lower=packing.count, upper=cover.count, exact=exact)


def bracket_cell(n: typing.Optional[int], eps: Fraction, bracket: counting.CountBracket) -> ScalingCell:
    """A cell for one bracketed count; static counts sit at horizon 1."""
    return _cell(n or 1, eps, lower=bracket.lower, upper=bracket.upper)


def check_variational_bound(emergence: ScalingReport, measure_order: ScalingReport) -> int:
    """Check log log E_μ(n, eps) <= the upper log log N_M(n, eps) of the measure space on shared cells.

    Returns:
        The number of cells compared.

    Raises:
        VerificationError: at the first cell where the measure emergence is larger.
    """
    upper = {(cell.n, cell.eps): cell.double_log_upper for cell in measure_order.cells}
    compared = 0
    for cell in emergence.cells:
        bound = upper.get((cell.n, cell.eps))
        if bound is None:
            continue
        if cell.double_log_upper > bound:
            raise VerificationError(f"E_mu exceeds the measure-space count at n={cell.n}, eps={cell.eps}")
        compared += 1
    return compared
