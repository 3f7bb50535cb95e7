import logging
from fractions import Fraction

import pytest

from emergence_lab.hyperspace import FiniteClosedSet
from emergence_lab.measures import DiscreteMeasure, periodic_orbit_measure
from emergence_lab.systems import SymbolicSystem, full_shift, golden_mean

logger = logging.getLogger(__name__)


@pytest.fixture
def shift2() -> SymbolicSystem:
    return full_shift(2)


@pytest.fixture
def shift3() -> SymbolicSystem:
    return full_shift(3)


@pytest.fixture
def golden() -> SymbolicSystem:
    return golden_mean()


@pytest.fixture
def half() -> Fraction:
    return Fraction(1, 2)


@pytest.fixture
def dirac(shift2):
    def make(word: str) -> DiscreteMeasure:
        return DiscreteMeasure.dirac(shift2.point(word))

    return make


@pytest.fixture
def closed_set(shift2):
    def make(*words: str) -> FiniteClosedSet:
        return FiniteClosedSet(words, shift2)

    return make


@pytest.fixture
def fixed_points(shift2):
    return [periodic_orbit_measure("0", shift2, resolution=4), periodic_orbit_measure("1", shift2, resolution=4)]


@pytest.fixture
def cache_dir(tmp_path, monkeypatch):
    directory = tmp_path / "cache"
    monkeypatch.setenv("EMERGENCE_LAB_CACHE", str(directory))
    return directory
