"""Finite closed sets as elements of K(X) and the Hausdorff metrics H, H^n and H_n."""

from __future__ import annotations

import logging
import typing
from fractions import Fraction

from emergence_lab.errors import (
    CyclicAdmissibilityError,
    InexactDistanceError,
    MalformedSpecError,
    MismatchedSystemsError,
    WordTooShortError,
)
from emergence_lab.measures import periodic_extension, rotations
from emergence_lab.systems import BowenContext, CylinderPoint, SymbolicSystem, bowen_distance

logger = logging.getLogger(__name__)


class FiniteClosedSet:
    """A nonempty finite set of cylinder points of one length.

    Args:
        points: Words or CylinderPoints; duplicates are dropped
        system: The system the words live in

    Raises:
        MalformedSpecError: when the set is empty or the words have different lengths.
    """

    def __init__(self, points: typing.Iterable[typing.Union[str, CylinderPoint]], system: SymbolicSystem) -> None:
        self.system = system
        words = set()
        for point in points:
            if isinstance(point, CylinderPoint):
                if point.system != system:
                    raise MismatchedSystemsError("point belongs to another system")
                word = point.word
            else:
                system.check_word(point)
                word = point
            words.add(word)

        if not words:
            raise MalformedSpecError("closed sets must be nonempty")
        if len({len(word) for word in words}) != 1:
            raise MalformedSpecError("all points of a closed set must share one resolution")
        self._words: typing.Tuple[str, ...] = tuple(sorted(words))

    @property
    def words(self) -> typing.Tuple[str, ...]:
        return self._words

    @property
    def points(self) -> typing.List[CylinderPoint]:
        return [CylinderPoint(word, self.system) for word in self._words]

    @property
    def resolution(self) -> int:
        return len(self._words[0])

    def union(self, other: FiniteClosedSet) -> FiniteClosedSet:
        _check_pair(self, other)
        return FiniteClosedSet(self._words + other.words, self.system)

    def truncate(self, length: int) -> FiniteClosedSet:
        if length < 1:
            raise WordTooShortError(f"cannot truncate to length {length}")
        return FiniteClosedSet((word[:length] for word in self._words), self.system)

    def is_invariant(self) -> bool:
        """True when f(B) = B at the resolution the image leaves determined."""
        return image_set(self) == self.truncate(self.resolution - 1)

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        return {"points": list(self._words)}

    def __contains__(self, word: object) -> bool:
        return word in self._words

    def __iter__(self) -> typing.Iterator[str]:
        return iter(self._words)

    def __len__(self) -> int:
        return len(self._words)

    def __eq__(self, other: typing.Any) -> bool:
        if not isinstance(other, FiniteClosedSet):
            return NotImplemented
        return self.system == other.system and self._words == other._words

    def __hash__(self) -> int:
        return hash((self.system, self._words))

    def __repr__(self) -> str:
        return f"FiniteClosedSet({set(self._words)})"


def _check_pair(left: FiniteClosedSet, right: FiniteClosedSet) -> None:
    if left.system != right.system:
        raise MismatchedSystemsError("sets belong to different systems")


def _distances(
    left: FiniteClosedSet, right: FiniteClosedSet, ctx: BowenContext
) -> typing.List[typing.List[Fraction]]:
    matrix = []
    for x in left.points:
        row = []
        for y in right.points:
            distance = bowen_distance(x, y, ctx)
            if not distance.exact:
                raise InexactDistanceError(f"d_{ctx.n}({x.word}, {y.word}) is not determined at this resolution")
            row.append(distance.value)
        matrix.append(row)
    return matrix


def hausdorff(left: FiniteClosedSet, right: FiniteClosedSet, ctx: typing.Optional[BowenContext] = None) -> Fraction:
    """H (or H^n with a horizon): the larger of the two directed excursions.

    !!! Example
        ```python
        from emergence_lab.hyperspace import FiniteClosedSet, hausdorff
        from emergence_lab.systems import BowenContext, full_shift

        system = full_shift(2)
        hausdorff(FiniteClosedSet(["00"], system), FiniteClosedSet(["01"], system), BowenContext(n=2))  # 1
        ```
    """
    _check_pair(left, right)
    ctx = ctx or BowenContext()
    matrix = _distances(left, right, ctx)
    forward = max(min(row) for row in matrix)
    backward = max(min(row[j] for row in matrix) for j in range(len(right)))
    return max(forward, backward)


def image_set(subset: FiniteClosedSet) -> FiniteClosedSet:
    """f(B): shift every point, dropping duplicates."""
    if subset.resolution < 2:
        raise WordTooShortError("points need length >= 2 to be shifted")
    return FiniteClosedSet((word[1:] for word in subset), subset.system)


def bowen_orbit_hausdorff(left: FiniteClosedSet, right: FiniteClosedSet, n: int = 1) -> Fraction:
    """H_n: the largest H between the first n images of the two sets."""
    _check_pair(left, right)
    if min(left.resolution, right.resolution) < n:
        raise WordTooShortError(f"points must have length >= {n} to be shifted {n - 1} times")
    best = Fraction(0)
    for step in range(n):
        best = max(best, hausdorff(left, right))
        if step < n - 1:
            left, right = image_set(left), image_set(right)
    return best


def periodic_fixed_set(words: typing.Sequence[str], system: SymbolicSystem, resolution: int) -> FiniteClosedSet:
    """Union of the full orbits of the periodic points word^∞, an element of K_f(X).

    Raises:
        CyclicAdmissibilityError: when some word^∞ is not admissible.
    """
    points: typing.List[str] = []
    for word in words:
        if not system.is_cyclically_admissible(word):
            raise CyclicAdmissibilityError(f"{word!r} cannot be repeated: {word[-1]}->{word[0]} is forbidden")
        points.extend(periodic_extension(rotated, resolution) for rotated in rotations(word))
    return FiniteClosedSet(points, system)


def diameter(subset: FiniteClosedSet, n: int = 1) -> Fraction:
    """Diameter of the set under d_n."""
    matrix = _distances(subset, subset, BowenContext(n=n))
    return max(max(row) for row in matrix)


def set_distance(left: FiniteClosedSet, right: FiniteClosedSet, n: int = 1) -> Fraction:
    """min d_n(x, y) over x in B and y in C; splitness compares this strictly against eps."""
    _check_pair(left, right)
    matrix = _distances(left, right, BowenContext(n=n))
    return min(min(row) for row in matrix)
