"""Covering and packing numbers of points, measures and closed sets, with their certified witnesses."""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
import math
import os
import typing
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx
import numpy as np

from emergence_lab import hyperspace, measures, utils
from emergence_lab.errors import (
    InexactDistanceError,
    InfeasibleCoverError,
    MalformedSpecError,
    ResourceLimitError,
    VerificationError,
)
from emergence_lab.hyperspace import FiniteClosedSet
from emergence_lab.measures import DiscreteMeasure
from emergence_lab.systems import BowenContext, CylinderPoint, SymbolicSystem, bowen_distance, enumerate_cylinders

if typing.TYPE_CHECKING:
    from emergence_lab.certificates import Certificate

logger = logging.getLogger(__name__)

Element = typing.Union[CylinderPoint, DiscreteMeasure, FiniteClosedSet]

POINT_DISTANCES = (utils.D, utils.D_N, utils.D_MEAN)
MEASURE_DISTANCES = (utils.W1, utils.W1_N, utils.LP, utils.LP_N)
SET_DISTANCES = (utils.H, utils.H_N)


def element_key(element: Element) -> typing.Any:
    """Lexicographic sort key used for the deterministic greedy order."""
    if isinstance(element, CylinderPoint):
        return element.word
    if isinstance(element, DiscreteMeasure):
        return element.atoms
    return element.words


def element_to_dict(element: Element) -> typing.Any:
    if isinstance(element, CylinderPoint):
        return element.word
    return element.to_dict()


@dataclass
class MetricSpaceView:
    """A finite family of points, measures or sets together with the metric they are compared with.

    Args:
        elements: The family
        distance: One of d, d_n, mean, W1, W1n, LP, LPn, H, Hn
        n: Horizon for the dynamical distances
        workers: Threads used to assemble distance matrices
    """

    elements: typing.Sequence[Element]
    distance: str = utils.D_N
    n: int = 1
    workers: int = 1
    _matrix: typing.Optional[typing.List[typing.List[Fraction]]] = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        if self.distance not in utils.VALID_DISTANCES:
            raise ValueError(f"distance must be one of {utils.VALID_DISTANCES}, got {self.distance!r}")
        if self.distance in (utils.D, utils.W1, utils.LP, utils.H):
            # static distances ignore the horizon
            self.n = 1
        expected: typing.Type = CylinderPoint
        if self.distance in MEASURE_DISTANCES:
            expected = DiscreteMeasure
        elif self.distance in SET_DISTANCES:
            expected = FiniteClosedSet
        if any(not isinstance(element, expected) for element in self.elements):
            raise MalformedSpecError(f"distance {self.distance} needs elements of type {expected.__name__}")

    @property
    def strict_cover(self) -> bool:
        """Point spanning uses d_n < eps; measure and set spanning use <= eps."""
        return self.distance in POINT_DISTANCES

    @property
    def context(self) -> BowenContext:
        mode = utils.MEAN if self.distance == utils.D_MEAN else utils.BOWEN
        return BowenContext(n=self.n, mode=mode)

    def between(self, left: Element, right: Element) -> Fraction:
        """Exact distance between two elements under the view's metric."""
        if self.distance in POINT_DISTANCES:
            result = bowen_distance(left, right, self.context)  # type: ignore[arg-type]
            if not result.exact:
                raise InexactDistanceError(
                    f"d_{self.n}({left}, {right}) is not determined at this resolution"  # type: ignore[union-attr]
                )
            return result.value
        if self.distance in (utils.W1, utils.W1_N):
            return measures.wasserstein(left, right, 1, self.context).cost  # type: ignore[arg-type]
        if self.distance in (utils.LP, utils.LP_N):
            return measures.levy_prokhorov(left, right, self.context)  # type: ignore[arg-type]
        return hyperspace.hausdorff(left, right, self.context)  # type: ignore[arg-type]

    def matrix(self) -> typing.List[typing.List[Fraction]]:
        """Symmetric matrix of pairwise distances, read from and written to the cache directory when set."""
        if self._matrix is not None:
            return self._matrix

        cache_path = self._cache_path()
        if cache_path is not None and os.path.exists(cache_path):
            with open(cache_path) as f:
                rows = json.load(f)
            logger.debug(f"Distance matrix loaded from {cache_path}")
            self._matrix = [[Fraction(value) for value in row] for row in rows]
            return self._matrix

        size = len(self.elements)

        def row(i: int) -> typing.List[Fraction]:
            return [self.between(self.elements[i], self.elements[j]) for j in range(i + 1, size)]

        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                upper = list(pool.map(row, range(size)))
        else:
            upper = [row(i) for i in range(size)]

        matrix = [[Fraction(0)] * size for _ in range(size)]
        for i in range(size):
            for offset, value in enumerate(upper[i]):
                j = i + 1 + offset
                matrix[i][j] = matrix[j][i] = value
        self._matrix = matrix

        if cache_path is not None:
            with open(cache_path, "w") as f:
                json.dump([[utils.format_rational(value) for value in row] for row in matrix], f)
            logger.debug(f"Distance matrix written to {cache_path}")
        return matrix

    def cross(self, candidates: typing.Sequence[Element]) -> typing.List[typing.List[Fraction]]:
        """Distances from every candidate centre to every element."""
        return [[self.between(candidate, element) for element in self.elements] for candidate in candidates]

    def _cache_path(self) -> typing.Optional[str]:
        directory = utils.cache_dir()
        if directory is None or not self.elements:
            return None
        payload = json.dumps(
            {
                "system": self.elements[0].system.to_dict(),
                "distance": self.distance,
                "n": self.n,
                "elements": [element_to_dict(element) for element in self.elements],
            },
            sort_keys=True,
        )
        os.makedirs(directory, exist_ok=True)
        return os.path.join(directory, f"{hashlib.sha256(payload.encode()).hexdigest()}.json")


def point_view(
    system: SymbolicSystem, length: int, n: int = 1, mode: str = utils.BOWEN, cap: int = utils.ENUMERATION_CAP
) -> MetricSpaceView:
    """All cylinders of the given length under d_n (or the mean metric)."""
    distance = utils.D_MEAN if mode == utils.MEAN else utils.D_N
    return MetricSpaceView(list(enumerate_cylinders(system, length, cap=cap)), distance=distance, n=n)


def measure_view(family: typing.Sequence[DiscreteMeasure], n: int = 1, distance: str = utils.W1_N) -> MetricSpaceView:
    return MetricSpaceView(list(family), distance=distance, n=n)


def set_view(family: typing.Sequence[FiniteClosedSet], n: int = 1) -> MetricSpaceView:
    return MetricSpaceView(list(family), distance=utils.H_N, n=n)


@dataclass(frozen=True)
class CountResult:
    """A certified count and the indices of its witness (separated family or chosen centres)."""

    count: int
    witness: typing.Tuple[int, ...]
    exact: bool
    strategy: str


@dataclass(frozen=True)
class CountBracket:
    """Certified lower and upper bounds on a covering number, with the exact value when they meet.

    Args:
        lower: Size of a verified family separated at 2 eps
        upper: Size of a verified cover at eps
        exact: The covering number when it is pinned down
    """

    lower: int
    upper: int
    exact: typing.Optional[int] = None

    def __post_init__(self) -> None:
        if self.lower > self.upper:
            raise VerificationError(f"bracket is inverted: lower {self.lower} > upper {self.upper}")


def _greedy_order(view: MetricSpaceView) -> typing.List[int]:
    return sorted(range(len(view.elements)), key=lambda index: element_key(view.elements[index]))


def _greedy_pack(
    matrix: typing.Sequence[typing.Sequence[Fraction]],
    order: typing.Iterable[int],
    separated: typing.Callable[[Fraction], bool],
) -> typing.List[int]:
    chosen: typing.List[int] = []
    for index in order:
        if all(separated(matrix[index][other]) for other in chosen):
            chosen.append(index)
    return chosen


def _verify_pairs(
    matrix: typing.Sequence[typing.Sequence[Fraction]],
    witness: typing.Sequence[int],
    separated: typing.Callable[[Fraction], bool],
) -> None:
    for a, b in itertools.combinations(witness, 2):
        if not separated(matrix[a][b]):
            raise VerificationError(f"witness pair ({a}, {b}) at distance {matrix[a][b]} is not separated", pair=(a, b))


def packing_count(
    view: MetricSpaceView,
    eps: Fraction,
    strategy: str = utils.GREEDY,
    restarts: int = utils.DEFAULT_RESTARTS,
    seed: int = 0,
    cap: int = utils.EXACT_CAP,
) -> CountResult:
    """Size of an eps-separated subfamily (pairwise distance > eps).

    The greedy strategy returns the best maximal family over a lexicographic pass and `restarts`
    seeded shuffles, a lower bound on S. The exact strategy returns S itself through a maximum
    clique of the separation graph and is limited to `cap` elements.

    Raises:
        ResourceLimitError: when the exact strategy is asked for more than `cap` elements.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError(f"epsilon must be positive, got {eps}")
    if not view.elements:
        return CountResult(0, (), True, strategy)

    def separated(value: Fraction) -> bool:
        return value > eps

    if strategy == utils.EXACT:
        if len(view.elements) > cap:
            raise ResourceLimitError(f"exact packing is limited to {cap} elements, got {len(view.elements)}")
        matrix = view.matrix()
        graph = nx.Graph()
        graph.add_nodes_from(range(len(view.elements)))
        graph.add_edges_from(
            (i, j) for i, j in itertools.combinations(range(len(view.elements)), 2) if separated(matrix[i][j])
        )
        clique, _ = nx.max_weight_clique(graph, weight=None)
        witness = tuple(sorted(clique))
        _verify_pairs(matrix, witness, separated)
        return CountResult(len(witness), witness, True, strategy)

    matrix = view.matrix()
    best = _greedy_pack(matrix, _greedy_order(view), separated)
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        order = [int(index) for index in rng.permutation(len(view.elements))]
        candidate = _greedy_pack(matrix, order, separated)
        if len(candidate) > len(best):
            best = candidate
    witness = tuple(sorted(best))
    _verify_pairs(matrix, witness, separated)
    exact = len(witness) == len(view.elements)
    return CountResult(len(witness), witness, exact, strategy)


def covering_count(
    view: MetricSpaceView,
    eps: Fraction,
    candidates: typing.Optional[typing.Sequence[Element]] = None,
    strategy: str = utils.GREEDY,
    strict: typing.Optional[bool] = None,
    cap: int = utils.EXACT_CAP,
) -> CountResult:
    """Number of candidate centres needed to cover every element within eps.

    Point views cover with d_n < eps, measure and set views with <= eps, unless `strict` says
    otherwise. The greedy strategy is the classical set-cover heuristic (an upper bound on N);
    the exact strategy searches subsets of increasing size and needs at most `cap` candidates.

    Raises:
        InfeasibleCoverError: when some element is not within eps of any candidate.
        ResourceLimitError: when the exact strategy gets more than `cap` candidates.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError(f"epsilon must be positive, got {eps}")
    strict = view.strict_cover if strict is None else strict
    centres = list(view.elements) if candidates is None else list(candidates)
    distances = view.matrix() if candidates is None else view.cross(centres)

    def within(value: Fraction) -> bool:
        return value < eps if strict else value <= eps

    covers = [frozenset(j for j, value in enumerate(row) if within(value)) for row in distances]
    everything = frozenset(range(len(view.elements)))
    uncovered = everything - frozenset().union(*covers) if covers else everything
    if uncovered:
        raise InfeasibleCoverError(f"{len(uncovered)} elements are not within {eps} of any candidate")

    chosen: typing.List[int] = []
    remaining = set(everything)
    while remaining:
        best = max(range(len(centres)), key=lambda c: (len(covers[c] & remaining), -c))
        chosen.append(best)
        remaining -= covers[best]
    greedy = CountResult(len(chosen), tuple(chosen), len(chosen) <= 1, utils.GREEDY)
    if strategy != utils.EXACT or greedy.exact:
        return greedy

    if len(centres) > cap:
        raise ResourceLimitError(f"exact covering is limited to {cap} candidates, got {len(centres)}")
    for size in range(1, greedy.count):
        for subset in itertools.combinations(range(len(centres)), size):
            if frozenset().union(*(covers[c] for c in subset)) == everything:
                return CountResult(size, subset, True, utils.EXACT)
    return CountResult(greedy.count, greedy.witness, True, utils.EXACT)


def count_bracket(view: MetricSpaceView, eps: Fraction, strategy: str = utils.GREEDY) -> CountBracket:
    """Bracket the closed covering number: S(2 eps) <= N(eps) <= S(eps).

    The upper end is the smaller of a greedy cover and a maximal eps-separated family (which is
    itself a cover).
    """
    eps = Fraction(eps)
    lower = packing_count(view, 2 * eps, strategy=strategy)
    cover = covering_count(view, eps, strategy=strategy, strict=False)
    net = packing_count(view, eps, strategy=utils.GREEDY, restarts=0)
    upper = min(cover.count, net.count)
    exact = upper if lower.count == upper or cover.exact else None
    return CountBracket(lower=lower.count, upper=upper, exact=exact)


def apart_count(
    family: typing.Sequence[DiscreteMeasure], n: int, eps: Fraction
) -> CountResult:
    """Greedy pairwise (n, eps)-apart subfamily: support distances at least eps."""
    eps = Fraction(eps)
    chosen: typing.List[int] = []
    for index, measure in enumerate(family):
        if all(measures.support_distance(measure, family[other], n) >= eps for other in chosen):
            chosen.append(index)
    return CountResult(len(chosen), tuple(chosen), len(chosen) == len(family), utils.GREEDY)


def split_count(family: typing.Sequence[FiniteClosedSet], n: int, eps: Fraction) -> CountResult:
    """Greedy pairwise (n, eps)-split subfamily: set distances strictly above eps."""
    eps = Fraction(eps)
    chosen: typing.List[int] = []
    for index, subset in enumerate(family):
        if all(hyperspace.set_distance(subset, family[other], n) > eps for other in chosen):
            chosen.append(index)
    return CountResult(len(chosen), tuple(chosen), len(chosen) == len(family), utils.GREEDY)


def _centre_words(
    system: SymbolicSystem, depth: int, resolution: int, cap: int = utils.ENUMERATION_CAP
) -> typing.Dict[str, str]:
    """Map each cylinder of the given depth to a centre word of the given resolution inside it."""
    if depth == 0:
        return {"": system.extend(utils.ALPHABET[0], resolution)}
    return {
        point.word: system.extend(point.word, resolution) for point in enumerate_cylinders(system, depth, cap=cap)
    }


def random_measure(
    system: SymbolicSystem, resolution: int, support: int, rng: np.random.Generator
) -> DiscreteMeasure:
    """A seeded measure on at most `support` random admissible words, weights proportional to integers in [1, 20]."""
    words = set()
    for _ in range(support):
        symbols = [int(rng.integers(system.m))]
        while len(symbols) < resolution:
            successors = [s for s in range(system.m) if system.allowed(symbols[-1], s)]
            symbols.append(successors[int(rng.integers(len(successors)))])
        words.add("".join(utils.ALPHABET[s] for s in symbols))
    raw = [int(rng.integers(1, 21)) for _ in words]
    total = sum(raw)
    return DiscreteMeasure(((word, Fraction(value, total)) for word, value in zip(sorted(words), raw)), system)


def round_to_grid(weights: typing.Sequence[Fraction], resolution: int) -> typing.List[int]:
    """Largest-remainder rounding of a probability vector to multiples of 1/resolution."""
    scaled = [weight * resolution for weight in weights]
    counts = [math.floor(value) for value in scaled]
    deficit = resolution - sum(counts)
    by_remainder = sorted(range(len(weights)), key=lambda i: (-(scaled[i] - counts[i]), i))
    for i in by_remainder[:deficit]:
        counts[i] += 1
    return counts


@dataclass
class BolleyCover:
    """A W_p spanning family: weights on a 1/K simplex grid over the centres of a closed delta/2 cover.

    The family is described, not stored; `members` materializes it under the grid cap.
    """

    system: SymbolicSystem
    delta: Fraction
    p: int
    n: int
    depth: int
    centres: typing.Dict[str, str]
    grid: int
    family_size: int
    log_family_size: float
    log_bound: float
    checked: int = 0

    @property
    def size(self) -> int:
        """N(X, delta/2) under closed balls: the number of centres."""
        return len(self.centres)

    def nearest(self, mu: DiscreteMeasure) -> DiscreteMeasure:
        """The family member obtained by moving every atom to its centre and rounding to the grid."""
        projected: typing.Dict[str, Fraction] = {}
        for word, weight in mu.atoms:
            centre = self.centres[word[: self.depth]]
            projected[centre] = projected.get(centre, Fraction(0)) + weight
        words = sorted(projected)
        counts = round_to_grid([projected[word] for word in words], self.grid)
        return DiscreteMeasure(
            ((word, Fraction(count, self.grid)) for word, count in zip(words, counts) if count), self.system
        )

    def members(self, cap: int = utils.GRID_CAP) -> typing.Iterator[DiscreteMeasure]:
        if self.family_size > cap:
            raise ResourceLimitError(f"Bolley family of size {self.family_size} exceeds the grid cap {cap}")
        words = sorted(self.centres.values())
        for bars in itertools.combinations(range(self.grid + len(words) - 1), len(words) - 1):
            edges = (-1,) + bars + (self.grid + len(words) - 1,)
            counts = [edges[i + 1] - edges[i] - 1 for i in range(len(words))]
            yield DiscreteMeasure(
                ((word, Fraction(count, self.grid)) for word, count in zip(words, counts) if count), self.system
            )


def bolley_cover(
    system: SymbolicSystem,
    delta: Fraction,
    p: int = 1,
    n: int = 1,
    samples: int = 100,
    seed: int = 0,
    support: int = 4,
    enumeration_cap: int = utils.ENUMERATION_CAP,
    grid_cap: int = utils.GRID_CAP,
) -> BolleyCover:
    """Build the W_p^n spanning family behind the (8eD/delta)^(p N(X, delta/2)) bound and check it.

    Every measure is moved to the centres of the closed delta/2 cylinders (cost at most
    (delta/2)^p) and then rounded to the 1/K grid (cost at most D^p M / (2K)), so
    K >= (M/2)(2D/delta)^p keeps the total within delta.

    Raises:
        ResourceLimitError: when the centres cannot be enumerated or the family exceeds `grid_cap`.
        VerificationError: when the family exceeds the bound or a sampled measure is not covered.
    """
    delta = Fraction(delta)
    diameter = system.diameter
    if not 0 < delta < diameter:
        raise ValueError(f"delta must lie in (0, {diameter}), got {delta}")
    if p not in utils.VALID_P:
        raise ValueError(f"p must be one of {utils.VALID_P}, got {p}")

    depth = system.ball_depth(n, delta / 2, strict=False)
    resolution = max(depth, n) + 1
    centres = _centre_words(system, depth, resolution, cap=enumeration_cap)
    size = len(centres)
    grid = max(1, math.ceil(Fraction(size, 2) * (2 * diameter / delta) ** p))
    family_size = math.comb(grid + size - 1, size - 1)
    log_family_size = math.log(family_size)
    log_bound = p * size * math.log(8 * math.e * float(diameter / delta))
    logger.info(f"Bolley cover: {size} centres at depth {depth}, grid 1/{grid}, log size {log_family_size:.3f}")

    if family_size > grid_cap:
        raise ResourceLimitError(f"Bolley family of size {family_size} exceeds the grid cap {grid_cap}")
    if log_family_size > log_bound:
        raise VerificationError(f"family of log size {log_family_size} exceeds the bound {log_bound}")

    cover = BolleyCover(
        system=system,
        delta=delta,
        p=p,
        n=n,
        depth=depth,
        centres=centres,
        grid=grid,
        family_size=family_size,
        log_family_size=log_family_size,
        log_bound=log_bound,
    )

    rng = np.random.default_rng(seed)
    ctx = BowenContext(n=n)
    for index in range(samples):
        mu = random_measure(system, resolution, support, rng)
        member = cover.nearest(mu)
        cost = measures.wasserstein(mu, member, p, ctx).cost
        if cost > delta**p:
            raise VerificationError(f"sample {index} is at W_p^p = {cost} > {delta ** p} from the family")
        cover.checked += 1
    return cover


@dataclass
class PowerSetCover:
    """Spanning family of K(X) under H^n: all nonempty subsets of a strict (n, eps)-spanning set."""

    n: int
    eps: Fraction
    centres: typing.List[str]
    checked: int = 0

    @property
    def size(self) -> int:
        return len(self.centres)

    @property
    def log_family_size(self) -> float:
        """log of 2^N, which bounds the 2^N - 1 nonempty subsets."""
        return self.size * math.log(2)


def power_set_cover(
    system: SymbolicSystem,
    n: int,
    eps: Fraction,
    samples: int = 200,
    seed: int = 0,
    points: int = 4,
    enumeration_cap: int = utils.ENUMERATION_CAP,
) -> PowerSetCover:
    """Check N_K(n, eps) <= 2^N(f, n, eps) constructively on random closed sets.

    For each sampled B the subset C of centres within d_n < eps of B satisfies H^n(B, C) <= eps.

    Raises:
        VerificationError: when a sampled set is not covered.
    """
    eps = Fraction(eps)
    depth = system.ball_depth(n, eps, strict=True)
    resolution = max(depth, n) + 1
    centres = sorted(_centre_words(system, depth, resolution, cap=enumeration_cap).values())
    cover = PowerSetCover(n=n, eps=eps, centres=centres)
    ctx = BowenContext(n=n)
    rng = np.random.default_rng(seed)

    for index in range(samples):
        sample = FiniteClosedSet(random_measure(system, resolution, points, rng).words, system)
        chosen = [
            centre
            for centre in centres
            if any(bowen_distance(system.point(centre), point, ctx).value < eps for point in sample.points)
        ]
        distance = hyperspace.hausdorff(sample, FiniteClosedSet(chosen, system), ctx)
        if distance > eps:
            raise VerificationError(f"sample {index} is at H^{n} = {distance} > {eps} from its centres")
        cover.checked += 1
    return cover


def _certificate_distance(certificate: Certificate, left: typing.Any, right: typing.Any) -> Fraction:
    n = certificate.n
    if certificate.kind == utils.APART_MEASURES:
        return measures.support_distance(left, right, n)
    if certificate.kind == utils.SEPARATED_MEASURES:
        return measures.wasserstein(left, right, 1, BowenContext(n=n)).cost
    return hyperspace.hausdorff(left, right, BowenContext(n=n))


def verify_certificate(certificate: Certificate) -> int:
    """Re-check a certificate with the counting metrics, independently of how it was built.

    Apart families need support distances >= eps; separated measure and set families need
    W_1^n or H^n strictly above eps. Pairs are the recorded ones (every pair for a full record).

    Returns:
        The number of pairs checked.

    Raises:
        VerificationError: on the first failing pair.
    """
    eps = certificate.eps
    strict = certificate.kind != utils.APART_MEASURES
    witnesses = certificate.witnesses
    checked = 0
    for record in certificate.verification.pairs:
        i, j = record.pair
        if not (0 <= i < len(witnesses) and 0 <= j < len(witnesses)) or i == j:
            raise VerificationError(f"recorded pair ({i}, {j}) does not index two witnesses", pair=(i, j))
        value = _certificate_distance(certificate, witnesses[i], witnesses[j])
        holds = value > eps if strict else value >= eps
        if not holds:
            raise VerificationError(
                f"pair ({i}, {j}) at distance {utils.format_rational(value)} breaks the claimed scale "
                f"{utils.format_rational(eps)}",
                pair=(i, j),
            )
        if record.distance is not None and record.distance != value:
            raise VerificationError(
                f"pair ({i}, {j}) recorded distance {utils.format_rational(record.distance)} but measures "
                f"{utils.format_rational(value)}",
                pair=(i, j),
            )
        checked += 1
    logger.info(f"Certificate {certificate.kind} re-verified on {checked} pairs")
    return checked
