from fractions import Fraction

import pytest

from emergence_lab import errors
from emergence_lab.hyperspace import (
    FiniteClosedSet,
    bowen_orbit_hausdorff,
    diameter,
    hausdorff,
    image_set,
    periodic_fixed_set,
    set_distance,
)
from emergence_lab.systems import BowenContext


def test_closed_set_is_sorted_and_deduplicated(shift2):
    subset = FiniteClosedSet(["10", "01", "10"], shift2)
    assert subset.words == ("01", "10")
    assert len(subset) == 2
    assert "01" in subset
    assert subset.to_dict() == {"points": ["01", "10"]}


def test_closed_set_must_be_nonempty(shift2):
    with pytest.raises(errors.MalformedSpecError):
        FiniteClosedSet([], shift2)


def test_closed_set_needs_one_resolution(shift2):
    with pytest.raises(errors.MalformedSpecError):
        FiniteClosedSet(["0", "01"], shift2)


def test_closed_set_checks_symbols(golden):
    with pytest.raises(errors.IllegalSymbolError):
        FiniteClosedSet(["011"], golden)


def test_hausdorff_identity(closed_set):
    subset = closed_set("0101", "1010")
    assert hausdorff(subset, subset) == 0


def test_hausdorff_between_singletons(closed_set):
    assert hausdorff(closed_set("00"), closed_set("01")) == Fraction(1, 2)
    assert hausdorff(closed_set("00"), closed_set("01"), BowenContext(n=2)) == 1


def test_hausdorff_of_a_point_and_a_pair(closed_set):
    # the excursion from {x, y} back to {x} is d(x, y)
    assert hausdorff(closed_set("000"), closed_set("000", "001")) == Fraction(1, 4)
    assert hausdorff(closed_set("000"), closed_set("000", "100")) == 1


def test_hausdorff_is_symmetric(closed_set):
    left, right = closed_set("000", "011"), closed_set("010", "110", "111")
    assert hausdorff(left, right) == hausdorff(right, left)


def test_hausdorff_needs_determined_distances(closed_set):
    with pytest.raises(errors.InexactDistanceError):
        hausdorff(closed_set("0"), closed_set("1"), BowenContext(n=2))


def test_mismatched_systems(shift3, closed_set):
    with pytest.raises(errors.MismatchedSystemsError):
        hausdorff(closed_set("00"), FiniteClosedSet(["00"], shift3))


def test_image_set(closed_set):
    assert image_set(closed_set("01", "11")) == closed_set("1")
    assert image_set(closed_set("010", "101")) == closed_set("01", "10")


def test_image_set_needs_length_two(closed_set):
    with pytest.raises(errors.WordTooShortError):
        image_set(closed_set("0"))


def test_periodic_fixed_set(shift2, closed_set):
    subset = periodic_fixed_set(["01"], shift2, 4)
    assert subset == closed_set("0101", "1010")
    assert subset.is_invariant()
    assert subset.union(periodic_fixed_set(["0"], shift2, 4)).is_invariant()
    assert not closed_set("01").is_invariant()


def test_periodic_fixed_set_needs_cyclic_words(golden):
    with pytest.raises(errors.CyclicAdmissibilityError):
        periodic_fixed_set(["0", "11"], golden, 4)


def test_orbit_hausdorff_stays_below_the_bowen_hausdorff(closed_set):
    left, right = closed_set("0010", "0111"), closed_set("0011", "1100", "1010")
    for n in range(1, 5):
        orbit = bowen_orbit_hausdorff(left, right, n)
        bowen = hausdorff(left, right, BowenContext(n=n))
        assert orbit <= bowen
        assert bowen <= orbit + max(diameter(left, n), diameter(right, n))


def test_orbit_hausdorff_needs_long_words(closed_set):
    with pytest.raises(errors.WordTooShortError):
        bowen_orbit_hausdorff(closed_set("01"), closed_set("10"), 3)


def test_diameter_and_set_distance(closed_set):
    assert diameter(closed_set("000")) == 0
    assert diameter(closed_set("000", "001")) == Fraction(1, 4)
    assert diameter(closed_set("000", "001"), 3) == 1
    assert set_distance(closed_set("000", "011"), closed_set("010", "111")) == Fraction(1, 4)
