"""Finitely supported probability measures on cylinder points and the transport metrics between them."""

from __future__ import annotations

import logging
import typing
from dataclasses import dataclass
from fractions import Fraction

from emergence_lab import transport, utils
from emergence_lab.errors import (
    CyclicAdmissibilityError,
    InexactDistanceError,
    MalformedSpecError,
    MismatchedSystemsError,
    WordTooShortError,
)
from emergence_lab.systems import BowenContext, CylinderPoint, Distance, SymbolicSystem, bowen_distance

logger = logging.getLogger(__name__)

WeightLike = typing.Union[Fraction, int, str]


class DiscreteMeasure:
    """A probability measure with finitely many atoms, an element of M(X).

    Atoms on the same word are merged, zero weights are dropped and the atoms are kept in
    lexicographic word order, so two measures are equal exactly when they have the same atoms.

    !!! Example
        ```python
        from fractions import Fraction

        from emergence_lab.measures import DiscreteMeasure
        from emergence_lab.systems import full_shift

        mu = DiscreteMeasure.from_words(full_shift(2), {"01": Fraction(1, 2), "11": Fraction(1, 2)})
        ```

    Args:
        atoms: Pairs of word (or CylinderPoint) and weight
        system: The system the words live in

    Raises:
        MalformedSpecError: when a weight is negative or the weights do not sum to 1.
    """

    def __init__(
        self,
        atoms: typing.Iterable[typing.Tuple[typing.Union[str, CylinderPoint], WeightLike]],
        system: SymbolicSystem,
    ) -> None:
        self.system = system
        merged: typing.Dict[str, Fraction] = {}
        for point, raw_weight in atoms:
            word = point.word if isinstance(point, CylinderPoint) else point
            if isinstance(point, CylinderPoint) and point.system != system:
                raise MismatchedSystemsError("atom belongs to another system")
            weight = Fraction(raw_weight)
            if weight < 0:
                raise MalformedSpecError(f"negative weight {weight} on atom {word!r}")
            system.check_word(word)
            merged[word] = merged.get(word, Fraction(0)) + weight

        total = sum(merged.values(), Fraction(0))
        if total != 1:
            raise MalformedSpecError(f"weights sum to {utils.format_rational(total)}, expected 1")

        self._atoms: typing.Tuple[typing.Tuple[str, Fraction], ...] = tuple(
            (word, weight) for word, weight in sorted(merged.items()) if weight > 0
        )
        self._hash = hash((self.system, self._atoms))

    @classmethod
    def from_words(cls, system: SymbolicSystem, weights: typing.Mapping[str, WeightLike]) -> DiscreteMeasure:
        return cls(weights.items(), system)

    @classmethod
    def dirac(cls, point: CylinderPoint) -> DiscreteMeasure:
        return cls([(point.word, 1)], point.system)

    @classmethod
    def uniform(cls, system: SymbolicSystem, words: typing.Sequence[str]) -> DiscreteMeasure:
        if not words:
            raise MalformedSpecError("a uniform measure needs at least one word")
        weight = Fraction(1, len(words))
        return cls(((word, weight) for word in words), system)

    @classmethod
    def mix(cls, measures: typing.Sequence[DiscreteMeasure], weights: typing.Sequence[WeightLike]) -> DiscreteMeasure:
        """Convex combination Σ weights[i]·measures[i]."""
        if not measures or len(measures) != len(weights):
            raise MalformedSpecError("a mixture needs one weight per measure")
        system = measures[0].system
        atoms: typing.List[typing.Tuple[str, Fraction]] = []
        for measure, weight in zip(measures, weights):
            if measure.system != system:
                raise MismatchedSystemsError("mixed measures belong to different systems")
            atoms.extend((word, Fraction(weight) * mass) for word, mass in measure.atoms)
        return cls(atoms, system)

    @property
    def atoms(self) -> typing.Tuple[typing.Tuple[str, Fraction], ...]:
        return self._atoms

    @property
    def words(self) -> typing.List[str]:
        return [word for word, _ in self._atoms]

    @property
    def weights(self) -> typing.List[Fraction]:
        return [weight for _, weight in self._atoms]

    @property
    def points(self) -> typing.List[CylinderPoint]:
        return [CylinderPoint(word, self.system) for word in self.words]

    @property
    def resolution(self) -> int:
        """Length of the shortest atom word."""
        return min(len(word) for word in self.words)

    def as_dict(self) -> typing.Dict[str, Fraction]:
        return dict(self._atoms)

    def weight(self, word: str) -> Fraction:
        return self.as_dict().get(word, Fraction(0))

    def mass(self, prefix: str) -> Fraction:
        """Mass of the cylinder of `prefix`."""
        return sum((weight for word, weight in self._atoms if word.startswith(prefix)), Fraction(0))

    def truncate(self, length: int) -> DiscreteMeasure:
        """Project every atom onto its cylinder of the given length."""
        if length < 1:
            raise WordTooShortError(f"cannot truncate to length {length}")
        return DiscreteMeasure(((word[:length], weight) for word, weight in self._atoms), self.system)

    def is_invariant(self) -> bool:
        """True when f_*μ equals μ at the resolution the pushforward leaves determined."""
        if any(len(word) != len(self._atoms[0][0]) for word in self.words):
            return False
        return pushforward(self) == self.truncate(self.resolution - 1)

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        return {"atoms": [{"word": word, "weight": utils.format_rational(weight)} for word, weight in self._atoms]}

    def __len__(self) -> int:
        return len(self._atoms)

    def __eq__(self, other: typing.Any) -> bool:
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return self.system == other.system and self._atoms == other._atoms

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        inner = ", ".join(f"{word}: {utils.format_rational(weight)}" for word, weight in self._atoms)
        return f"DiscreteMeasure({{{inner}}})"


@dataclass(frozen=True)
class TransportPlan:
    """A coupling of two discrete measures, stored sparsely as (source index, target index, mass).

    Indices refer to the atom order of `source` and `target`.
    """

    entries: typing.Tuple[typing.Tuple[int, int, Fraction], ...]
    source: DiscreteMeasure
    target: DiscreteMeasure

    def __post_init__(self) -> None:
        rows = [Fraction(0)] * len(self.source)
        columns = [Fraction(0)] * len(self.target)
        for i, j, mass in self.entries:
            if mass < 0:
                raise ValueError(f"negative mass {mass} on ({i}, {j})")
            rows[i] += mass
            columns[j] += mass
        if rows != self.source.weights or columns != self.target.weights:
            raise ValueError("plan marginals do not match the measures")

    def mass_where(self, predicate: typing.Callable[[str, str], bool]) -> Fraction:
        sources, targets = self.source.words, self.target.words
        return sum((mass for i, j, mass in self.entries if predicate(sources[i], targets[j])), Fraction(0))


@dataclass(frozen=True)
class Transport:
    """Result of an exact transport solve.

    Args:
        cost: Exact optimum of Σ d^p·mass, that is W_p^p
        p: Order of the Wasserstein distance
        plan: An optimal coupling, None when the cost came from the closed form
    """

    cost: Fraction
    p: int
    plan: typing.Optional[TransportPlan] = None

    @property
    def value(self) -> float:
        """W_p as a float, for reporting only."""
        return float(self.cost) ** (1 / self.p)


def _check_pair(mu: DiscreteMeasure, nu: DiscreteMeasure) -> None:
    if mu.system != nu.system:
        raise MismatchedSystemsError("measures belong to different systems")


def _check_p(p: int) -> None:
    if p not in utils.VALID_P:
        raise ValueError(f"p must be one of {utils.VALID_P}, got {p}")


def distance_matrix(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    ctx: typing.Optional[BowenContext] = None,
    lower_bound: bool = False,
) -> typing.List[typing.List[Fraction]]:
    """Pairwise ground distances between the atoms of mu and nu.

    Raises:
        InexactDistanceError: when a pair is not determined at this resolution, unless
            `lower_bound` is set, in which case the undetermined values (which are lower
            bounds of every compatible distance) are used as they are.
    """
    ctx = ctx or BowenContext()
    matrix = []
    for x in mu.points:
        row = []
        for y in nu.points:
            distance: Distance = bowen_distance(x, y, ctx)
            if not distance.exact and not lower_bound:
                raise InexactDistanceError(
                    f"d_{ctx.n}({x.word}, {y.word}) is not determined; use words of length >= {ctx.n} "
                    "that are not prefixes of one another"
                )
            row.append(distance.value)
        matrix.append(row)
    return matrix


def wasserstein(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    p: int = 1,
    ctx: typing.Optional[BowenContext] = None,
    lower_bound: bool = False,
) -> Transport:
    """Exact W_p (or W_p^n when a horizon is given) by min-cost flow.

    !!! Example
        ```python
        from emergence_lab.measures import DiscreteMeasure, wasserstein
        from emergence_lab.systems import full_shift

        system = full_shift(2)
        result = wasserstein(DiscreteMeasure.dirac(system.point("00")), DiscreteMeasure.dirac(system.point("01")))
        result.cost  # Fraction(1, 2)
        ```

    Args:
        mu: Source measure
        nu: Target measure
        p: Order, one of 1, 2, 3
        ctx: Horizon and metric mode, defaults to the base metric d
        lower_bound: Accept undetermined distances, turning the result into a lower bound

    Returns:
        Transport with the exact W_p^p and an optimal plan
    """
    _check_pair(mu, nu)
    _check_p(p)
    distances = distance_matrix(mu, nu, ctx, lower_bound)
    costs = [[value**p for value in row] for row in distances]
    cost, entries = transport.min_cost_flow(mu.weights, nu.weights, costs)
    plan = TransportPlan(tuple(entries), mu, nu)
    return Transport(cost=cost, p=p, plan=plan)


def _bowen_height(system: SymbolicSystem, n: int, p: int) -> typing.Callable[[int], Fraction]:
    def height(index: int) -> Fraction:
        return system.power(max(0, index - n + 1)) ** p

    return height


def ultrametric_wasserstein(mu: DiscreteMeasure, nu: DiscreteMeasure, p: int = 1, n: int = 1) -> Transport:
    """Exact W_p^n through the closed form for ultrametric ground costs, without a flow solve.

    d_n depends only on the first disagreement, and so does d_n^p, so the optimum is a weighted
    sum of cylinder mass imbalances over the prefix tree.

    Raises:
        InexactDistanceError: when an atom is shorter than n or two distinct atoms are prefixes of one another.
    """
    _check_pair(mu, nu)
    _check_p(p)
    words = sorted(set(mu.words) | set(nu.words))
    if min(len(word) for word in words) < n:
        raise InexactDistanceError(f"atoms shorter than the horizon {n}")
    for left, right in zip(words, words[1:]):
        # in sorted order a proper prefix is immediately followed by one of its extensions
        if right.startswith(left):
            raise InexactDistanceError(f"atom {left!r} is a prefix of atom {right!r}")
    cost = transport.tree_cost(mu.as_dict(), nu.as_dict(), _bowen_height(mu.system, n, p))
    return Transport(cost=cost, p=p)


def levy_prokhorov(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    ctx: typing.Optional[BowenContext] = None,
    lower_bound: bool = False,
) -> Fraction:
    """Lévy–Prokhorov distance (LP^n with a horizon), exact for rational weights.

    Decided on the coupling form: the infimum of eps such that a coupling puts at most eps
    mass on pairs farther apart than eps, found with one max-flow per distinct distance.
    """
    _check_pair(mu, nu)
    if mu == nu:
        return Fraction(0)
    distances = distance_matrix(mu, nu, ctx, lower_bound)
    return transport.prokhorov_threshold(mu.weights, nu.weights, distances)


def pushforward(mu: DiscreteMeasure) -> DiscreteMeasure:
    """f_*μ: shift every atom, merging atoms whose images coincide."""
    if any(len(word) < 2 for word in mu.words):
        raise WordTooShortError("every atom needs length >= 2 to be pushed forward")
    return DiscreteMeasure(((word[1:], weight) for word, weight in mu.atoms), mu.system)


def iterate(mu: DiscreteMeasure, times: int) -> DiscreteMeasure:
    for _ in range(times):
        mu = pushforward(mu)
    return mu


def bowen_orbit_wasserstein(mu: DiscreteMeasure, nu: DiscreteMeasure, p: int = 1, n: int = 1) -> Transport:
    """W_{p,n}: the largest W_p between the first n pushforwards of mu and nu.

    Returns the Transport of the time attaining the maximum.
    """
    _check_pair(mu, nu)
    if min(mu.resolution, nu.resolution) < n:
        raise WordTooShortError(f"atoms must have length >= {n} to be pushed forward {n - 1} times")
    best: typing.Optional[Transport] = None
    for step in range(n):
        current = wasserstein(mu, nu, p)
        if best is None or current.cost > best.cost:
            best = current
        if step < n - 1:
            mu, nu = pushforward(mu), pushforward(nu)
    return typing.cast(Transport, best)


def bowen_orbit_levy_prokhorov(mu: DiscreteMeasure, nu: DiscreteMeasure, n: int = 1) -> Fraction:
    """LP_n: the largest LP between the first n pushforwards of mu and nu."""
    _check_pair(mu, nu)
    if min(mu.resolution, nu.resolution) < n:
        raise WordTooShortError(f"atoms must have length >= {n} to be pushed forward {n - 1} times")
    best = Fraction(0)
    for step in range(n):
        best = max(best, levy_prokhorov(mu, nu))
        if step < n - 1:
            mu, nu = pushforward(mu), pushforward(nu)
    return best


def empirical_measure(x: CylinderPoint, n: int) -> DiscreteMeasure:
    """e_n(x) = (1/n) Σ_{i<n} δ_{f^i x}.

    The shifted words are cut to the common length L - n + 1 so all atoms share one resolution.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    length = len(x.word) - n + 1
    if length < 1:
        raise WordTooShortError(f"word {x.word!r} is too short for {n} iterates")
    weight = Fraction(1, n)
    return DiscreteMeasure(((x.word[i : i + length], weight) for i in range(n)), x.system)


def rotations(word: str) -> typing.List[str]:
    """Distinct cyclic rotations of a word, in order of first appearance."""
    seen: typing.List[str] = []
    for shift in range(len(word)):
        rotated = word[shift:] + word[:shift]
        if rotated not in seen:
            seen.append(rotated)
    return seen


def periodic_extension(word: str, length: int) -> str:
    repeats = -(-length // len(word))
    return (word * repeats)[:length]


def periodic_orbit_measure(
    word: str, system: SymbolicSystem, resolution: typing.Optional[int] = None
) -> DiscreteMeasure:
    """The invariant measure equidistributed on the orbit of the periodic point word^∞.

    Args:
        word: Cyclically admissible period word
        system: The system
        resolution: Length of the atom words, defaults to the period

    Raises:
        CyclicAdmissibilityError: when word^∞ is not admissible.
    """
    if not system.is_cyclically_admissible(word):
        raise CyclicAdmissibilityError(f"{word!r} cannot be repeated: {word[-1]}->{word[0]} is forbidden")
    resolution = resolution or len(word)
    orbit = rotations(word)
    weight = Fraction(1, len(orbit))
    return DiscreteMeasure(((periodic_extension(rotated, resolution), weight) for rotated in orbit), system)


def support_distance(mu: DiscreteMeasure, nu: DiscreteMeasure, n: int = 1) -> Fraction:
    """min d_n(x, y) over x in supp(mu) and y in supp(nu); apartness compares this against eps."""
    _check_pair(mu, nu)
    matrix = distance_matrix(mu, nu, BowenContext(n=n))
    return min(min(row) for row in matrix)

