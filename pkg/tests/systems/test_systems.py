import itertools
import math
from fractions import Fraction

import pytest

from emergence_lab import errors
from emergence_lab.systems import (
    BowenContext,
    SymbolicSystem,
    base_distance,
    bowen_distance,
    enumerate_cylinders,
    full_shift,
    shift,
)


def test_base_distance_first_symbol(shift2):
    assert base_distance(shift2.point("0"), shift2.point("1")).value == 1


def test_base_distance_second_symbol(shift2):
    assert base_distance(shift2.point("00"), shift2.point("01")).value == Fraction(1, 2)


def test_base_distance_identity_is_exact(shift2):
    distance = base_distance(shift2.point("01"), shift2.point("01"))
    assert distance.value == 0
    assert distance.exact


def test_base_distance_prefix_is_inexact(shift2):
    distance = base_distance(shift2.point("01"), shift2.point("0111"))
    assert distance.value == 0
    assert not distance.exact


def test_bowen_distance(shift2):
    distance = bowen_distance(shift2.point("0110"), shift2.point("0111"), BowenContext(n=3))
    assert distance.value == Fraction(1, 2)
    assert distance.exact


def test_bowen_distance_short_words_are_flagged(shift2):
    distance = bowen_distance(shift2.point("01"), shift2.point("00"), BowenContext(n=3))
    assert distance.value == 1
    assert not distance.exact


def test_mean_distance(shift2):
    ctx = BowenContext(n=3, mode="mean")
    assert bowen_distance(shift2.point("0110"), shift2.point("0111"), ctx).value == Fraction(7, 24)


@pytest.mark.parametrize("length", range(1, 7))
def test_horizon_one_is_the_base_metric(shift2, length):
    words = [point.word for point in enumerate_cylinders(shift2, length)]
    for a, b in itertools.product(words, repeat=2):
        x, y = shift2.point(a), shift2.point(b)
        assert bowen_distance(x, y, BowenContext(n=1)) == base_distance(x, y)


def test_bowen_distance_is_at_least_the_base_metric(shift2):
    for a, b in itertools.combinations([p.word for p in enumerate_cylinders(shift2, 5)], 2):
        x, y = shift2.point(a), shift2.point(b)
        assert bowen_distance(x, y, BowenContext(n=4)).value >= base_distance(x, y).value


@pytest.mark.parametrize("n", [1, 2, 4])
@pytest.mark.parametrize("name", ["shift2", "golden"])
def test_mean_metric_is_at_most_bowen(name, n, request):
    system = request.getfixturevalue(name)
    bowen, mean = BowenContext(n=n), BowenContext(n=n, mode="mean")
    for a, b in itertools.combinations([p.word for p in enumerate_cylinders(system, 6)], 2):
        x, y = system.point(a), system.point(b)
        assert bowen_distance(x, y, mean).value <= bowen_distance(x, y, bowen).value


def test_mismatched_systems(shift2, shift3):
    with pytest.raises(errors.MismatchedSystemsError):
        base_distance(shift2.point("0"), shift3.point("0"))


def test_shift():
    system = full_shift(2)
    assert shift(system.point("0110")).word == "110"
    assert shift(system.point("01")).word == "1"


def test_shift_single_symbol(shift2):
    with pytest.raises(errors.WordTooShortError):
        shift(shift2.point("0"))


def test_enumerate_cylinders(shift2, shift3, golden):
    assert len(list(enumerate_cylinders(shift2, 3))) == 8
    assert [point.word for point in enumerate_cylinders(golden, 3)] == ["000", "001", "010", "100", "101"]
    assert len(list(enumerate_cylinders(shift3, 1))) == 3


def test_enumerate_cylinders_cap(shift2):
    with pytest.raises(errors.ResourceLimitError):
        list(enumerate_cylinders(shift2, 10, cap=100))


def test_enumerate_cylinders_needs_positive_length(shift2):
    with pytest.raises(ValueError):
        list(enumerate_cylinders(shift2, 0))


def test_illegal_symbols(shift2, golden):
    with pytest.raises(errors.IllegalSymbolError):
        shift2.point("012")
    with pytest.raises(errors.IllegalSymbolError):
        golden.point("0110")
    assert not golden.is_admissible("11")


@pytest.mark.parametrize(
    "kwargs",
    [
        {"m": 1},
        {"m": 2, "lam": Fraction(1)},
        {"m": 2, "lam": Fraction(0)},
        {"m": 2, "transitions": ((True,),)},
        {"m": 2, "transitions": ((True, False), (True, False))},
    ],
)
def test_invalid_systems(kwargs):
    with pytest.raises(errors.SystemSpecError):
        SymbolicSystem(**kwargs)


def test_all_ones_matrix_is_a_full_shift():
    system = SymbolicSystem(m=2, transitions=((True, True), (True, True)))
    assert system.is_full_shift
    assert system == full_shift(2)


def test_count_words(golden):
    assert [golden.count_words(length) for length in range(1, 7)] == [2, 3, 5, 8, 13, 21]


@pytest.mark.parametrize("k", range(0, 5))
def test_spanning_count_pattern(shift2, k):
    eps = shift2.power(k)
    for n in range(1, 13):
        assert shift2.spanning_count(n, eps) == 2 ** (n + k)


def test_counts_at_three_tenths(shift2):
    eps = Fraction(3, 10)
    assert shift2.ball_depth(3, eps) == 4
    assert shift2.spanning_count(3, eps) == 16
    assert shift2.separated_count(3, eps) == 16


def test_whole_space_ball(shift2):
    assert shift2.ball_depth(4, Fraction(1), strict=False) == 0
    assert shift2.closed_ball_count(4, Fraction(1)) == 1
    assert shift2.spanning_count(4, Fraction(2)) == 1


def test_topological_entropy(shift2, shift3, golden):
    assert shift2.topological_entropy() == pytest.approx(math.log(2))
    assert shift3.topological_entropy() == pytest.approx(math.log(3))
    assert golden.topological_entropy() == pytest.approx(math.log((1 + math.sqrt(5)) / 2), abs=1e-12)


def test_mixing(golden):
    assert golden.is_mixing()
    assert golden.connector(1, 1) == "0"
    assert golden.mixing_gap() == 1
    assert golden.specification_gap() == 1
    assert golden.connector_of_length(1, 1, 1) == "0"
    assert full_shift(2).specification_gap() == 0


def test_periodic_system_is_not_mixing():
    flip = SymbolicSystem(m=2, transitions=((False, True), (True, False)))
    assert not flip.is_mixing()
    with pytest.raises(errors.NonMixingError):
        flip.mixing_gap()


def test_system_file_representation(golden):
    data = golden.to_dict()
    assert data == {"type": "sft", "m": 2, "lambda": "1/2", "transitions": [[1, 1], [1, 0]]}
    assert SymbolicSystem.from_dict(data) == golden


def test_sft_without_matrix():
    with pytest.raises(errors.SystemSpecError):
        SymbolicSystem.from_dict({"type": "sft", "m": 2})
