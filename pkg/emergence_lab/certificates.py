"""Constructive lower-bound families with machine-checkable witnesses.

Every builder verifies its own family with prefix arithmetic on the words (first disagreement,
closed-form transport) and records the checked pairs; `counting.verify_certificate` re-checks
the record with the general solvers.
"""

from __future__ import annotations

import itertools
import logging
import math
import os
import typing
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from emergence_lab import utils
from emergence_lab.errors import MalformedSpecError, ResourceLimitError, VerificationError
from emergence_lab.hyperspace import FiniteClosedSet
from emergence_lab.measures import DiscreteMeasure, periodic_orbit_measure, ultrametric_wasserstein
from emergence_lab.systems import SymbolicSystem, enumerate_cylinders

logger = logging.getLogger(__name__)

Witness = typing.Union[DiscreteMeasure, FiniteClosedSet]

FULL = "full"
SAMPLED = "sampled"


@dataclass(frozen=True)
class HammingCodebook:
    """Half-weight binary vectors of length N with pairwise Hamming distance above N/4.

    Args:
        N: Code length, a multiple of 8
        vectors: One row per codeword, entries 0 or 1, each row with N/2 ones
        strategy: How the code was built (lexicographic or random first-fit)
        seed: Seed of the random strategy
    """

    N: int
    vectors: np.ndarray = field(repr=False)
    strategy: str = utils.LEXICOGRAPHIC
    seed: typing.Optional[int] = None

    def __post_init__(self) -> None:
        if self.vectors.ndim != 2 or self.vectors.shape[1] != self.N:
            raise ValueError(f"codewords must be vectors of length {self.N}")
        if np.any(self.vectors.sum(axis=1) != self.N // 2):
            raise VerificationError("every codeword must have exactly N/2 ones")

    @property
    def size(self) -> int:
        return int(self.vectors.shape[0])

    def hamming(self, i: int, j: int) -> int:
        return int(np.count_nonzero(self.vectors[i] != self.vectors[j]))

    def distances(self) -> np.ndarray:
        """Pairwise Hamming distances, N - 2<u, v> for half-weight vectors."""
        gram = self.vectors.astype(np.int64) @ self.vectors.astype(np.int64).T
        return self.N - 2 * gram

    def minimum_distance(self) -> typing.Optional[int]:
        if self.size < 2:
            return None
        distances = self.distances()
        upper = distances[np.triu_indices(self.size, k=1)]
        return int(upper.min())

    def support(self, index: int) -> typing.List[int]:
        return [int(i) for i in np.flatnonzero(self.vectors[index])]


def check_code_preliminaries(N: int) -> None:
    """Assert the counting facts the code sizes rest on.

    #F = C(N, N/2) >= (2N)^(-1/2) 2^N, and the Hamming ball of radius N/4 holds at most
    2^N exp(-pi N / 64) vectors (a Bernstein bound on fair coin tosses).

    Raises:
        VerificationError: when either inequality fails.
    """
    half_weight = math.comb(N, N // 2)
    # C^2 * 2N >= 4^N is the first inequality squared
    if half_weight * half_weight * 2 * N < 4**N:
        raise VerificationError(f"C({N}, {N // 2}) = {half_weight} is below (2N)^(-1/2) 2^N")
    ball = sum(math.comb(N, k) for k in range(N // 4 + 1))
    if math.log(ball) > N * math.log(2) - math.pi * N / 64:
        raise VerificationError(f"Hamming ball of radius {N // 4} holds {ball} vectors, above 2^N e^(-pi N/64)")


def _lexicographic_code(N: int, limit: int) -> np.ndarray:
    threshold = 3 * N // 8
    accepted = np.zeros((0, N), dtype=np.int64)
    for ones in itertools.combinations(range(N), N // 2):
        candidate = np.zeros(N, dtype=np.int64)
        candidate[list(ones)] = 1
        # distance > N/4 <=> inner product < 3N/8
        if accepted.shape[0] == 0 or np.all(accepted @ candidate < threshold):
            accepted = np.vstack([accepted, candidate])
            if accepted.shape[0] >= limit:
                break
    return accepted.astype(np.uint8)


def _random_code(N: int, limit: int, seed: int, batch: int = 1024) -> np.ndarray:
    rng = np.random.default_rng(seed)
    threshold = 3 * N // 8
    accepted = np.zeros((limit, N), dtype=np.float32)
    count = 0
    attempts = 0
    while count < limit and attempts < 16 * limit:
        order = np.argsort(rng.random((batch, N)), axis=1)
        candidates = np.zeros((batch, N), dtype=np.float32)
        np.put_along_axis(candidates, order[:, : N // 2], 1.0, axis=1)
        attempts += batch

        if count:
            clear = np.all(candidates @ accepted[:count].T < threshold, axis=1)
        else:
            clear = np.ones(batch, dtype=bool)
        start = count
        for row in np.flatnonzero(clear):
            candidate = candidates[row]
            if count > start and not np.all(accepted[start:count] @ candidate < threshold):
                continue
            accepted[count] = candidate
            count += 1
            if count >= limit:
                break
    return accepted[:count].astype(np.uint8)


def build_half_weight_code(
    N: int,
    strategy: typing.Optional[str] = None,
    seed: int = 0,
    limit: int = utils.DEFAULT_CODE_LIMIT,
    cap: int = utils.CODE_CAP,
) -> HammingCodebook:
    """First-fit code of half-weight vectors with pairwise distance > N/4.

    Lexicographic first-fit is used up to length 16 and a seeded random first-fit beyond.

    Args:
        N: Code length, a positive multiple of 8
        strategy: `lexicographic` or `random`; chosen from N when omitted
        seed: Seed of the random strategy
        limit: Stop once this many codewords are found
        cap: Largest code length accepted

    Raises:
        ValueError: when N is not a positive multiple of 8.
        ResourceLimitError: when N exceeds the cap.
    """
    if N <= 0 or N % 8:
        raise ValueError(f"code length must be a positive multiple of 8, got {N}")
    if N > cap:
        raise ResourceLimitError(f"code length {N} exceeds the cap {cap}")
    check_code_preliminaries(N)

    if strategy is None:
        strategy = utils.LEXICOGRAPHIC if N <= utils.GREEDY_CODE_CAP else utils.RANDOM
    if strategy == utils.LEXICOGRAPHIC:
        vectors = _lexicographic_code(N, limit)
        code = HammingCodebook(N=N, vectors=vectors, strategy=strategy)
    elif strategy == utils.RANDOM:
        vectors = _random_code(N, limit, seed)
        code = HammingCodebook(N=N, vectors=vectors, strategy=strategy, seed=seed)
    else:
        raise ValueError(f"unknown code strategy {strategy!r}")

    if code.size > math.comb(N, N // 2):
        raise VerificationError("code is larger than the number of half-weight vectors")
    minimum = code.minimum_distance()
    if minimum is not None and minimum <= N // 4:
        raise VerificationError(f"code has two words at distance {minimum} <= {N // 4}")
    logger.info(f"Half-weight code of length {N}: {code.size} words ({strategy})")
    return code


@dataclass(frozen=True)
class PairRecord:
    """One checked witness pair: its distance, the bound the construction predicts, a witnessing point."""

    pair: typing.Tuple[int, int]
    distance: typing.Optional[Fraction] = None
    bound: typing.Optional[Fraction] = None
    witness: typing.Optional[str] = None

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        data: typing.Dict[str, typing.Any] = {"pair": list(self.pair)}
        if self.distance is not None:
            data["distance"] = utils.format_rational(self.distance)
        if self.bound is not None:
            data["bound"] = utils.format_rational(self.bound)
        if self.witness is not None:
            data["witness"] = self.witness
        return data

    @classmethod
    def from_dict(cls, data: typing.Mapping[str, typing.Any]) -> PairRecord:
        i, j = data["pair"]
        distance = data.get("distance")
        bound = data.get("bound")
        return cls(
            pair=(int(i), int(j)),
            distance=None if distance is None else utils.parse_rational(distance),
            bound=None if bound is None else utils.parse_rational(bound),
            witness=data.get("witness"),
        )


@dataclass
class VerificationRecord:
    """The pairs checked for a certificate and how they were selected."""

    mode: str
    pairs: typing.List[PairRecord]
    seed: typing.Optional[int] = None

    @property
    def minimum(self) -> typing.Optional[Fraction]:
        values = [record.distance for record in self.pairs if record.distance is not None]
        return min(values) if values else None

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        minimum = self.minimum
        return {
            "mode": self.mode,
            "seed": self.seed,
            "minimum": None if minimum is None else utils.format_rational(minimum),
            "pairs": [record.to_dict() for record in self.pairs],
        }


@dataclass
class Certificate:
    """A family of measures or sets together with the record of its pairwise verification.

    Args:
        kind: apart_measures, separated_measures, separated_sets or split_sets
        system: The system the witnesses live in
        n: Horizon of the claimed scale
        eps: Epsilon of the claimed scale
        witnesses: The family
        verification: Checked pairs with their distances
        metadata: Construction details (code length, base size, orbit accounting)
    """

    kind: str
    system: SymbolicSystem
    n: int
    eps: Fraction
    witnesses: typing.List[Witness]
    verification: VerificationRecord
    metadata: typing.Dict[str, typing.Any] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.witnesses)

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        return {
            "kind": self.kind,
            "system": self.system.to_dict(),
            "scale": {"n": self.n, "epsilon": utils.format_rational(self.eps)},
            "witnesses": [witness.to_dict() for witness in self.witnesses],
            "verification": self.verification.to_dict(),
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: typing.Mapping[str, typing.Any]) -> Certificate:
        """Rebuild a certificate from its file representation.

        A witness that no longer is a valid measure or set (for example weights that stopped
        summing to 1) fails verification at the first recorded pair that uses it.
        """
        kind = data["kind"]
        if kind not in utils.VALID_CERTIFICATE_KINDS:
            raise MalformedSpecError(f"unknown certificate kind {kind!r}")
        system = SymbolicSystem.from_dict(data["system"])
        verification = data["verification"]
        pairs = [PairRecord.from_dict(record) for record in verification["pairs"]]

        witnesses: typing.List[Witness] = []
        for index, raw in enumerate(data["witnesses"]):
            try:
                if kind in (utils.APART_MEASURES, utils.SEPARATED_MEASURES):
                    witnesses.append(DiscreteMeasure(((a["word"], a["weight"]) for a in raw["atoms"]), system))
                else:
                    witnesses.append(FiniteClosedSet(raw["points"], system))
            except (MalformedSpecError, ValueError, ZeroDivisionError) as err:
                pair = next((record.pair for record in pairs if index in record.pair), None)
                raise VerificationError(f"witness {index} is invalid: {err}", pair=pair) from err

        scale = data["scale"]
        return cls(
            kind=kind,
            system=system,
            n=int(scale["n"]),
            eps=utils.parse_rational(scale["epsilon"]),
            witnesses=witnesses,
            verification=VerificationRecord(
                mode=verification["mode"], pairs=pairs, seed=verification.get("seed")
            ),
            metadata=dict(data.get("metadata", {})),
        )


def select_pairs(
    size: int, seed: int = 0, sampled_pairs: int = utils.DEFAULT_SAMPLED_PAIRS, full_limit: int = utils.FULL_PAIR_LIMIT
) -> typing.Tuple[str, typing.List[typing.Tuple[int, int]]]:
    """Every pair of a small family, or a seeded sample of distinct pairs of a large one."""
    total = size * (size - 1) // 2
    if total <= full_limit:
        return FULL, list(itertools.combinations(range(size), 2))
    rng = np.random.default_rng(seed)
    chosen: typing.Set[typing.Tuple[int, int]] = set()
    while len(chosen) < min(sampled_pairs, total):
        i, j = (int(value) for value in rng.choice(size, size=2, replace=False))
        chosen.add((min(i, j), max(i, j)))
    return SAMPLED, sorted(chosen)


def _first_disagreement(a: str, b: str) -> int:
    return len(os.path.commonprefix([a, b]))


def _prefix_distance(system: SymbolicSystem, a: str, b: str, n: int) -> Fraction:
    """d_n of two words of equal length that are not prefixes of one another."""
    if a == b:
        return Fraction(0)
    return system.power(max(0, _first_disagreement(a, b) - n + 1))


def code_length(size: int, cap: int = utils.CODE_CAP) -> int:
    """Longest admissible code length (a multiple of 8, at most `cap`) for a base of `size` elements."""
    return min(8 * (size // 8), cap)


def separated_words(
    system: SymbolicSystem, n: int, eps: Fraction, cap: int = utils.ENUMERATION_CAP
) -> typing.List[str]:
    """A maximum (n, eps)-separated family: one word per closed eps-ball of d_n, in lexicographic order."""
    depth = system.ball_depth(n, Fraction(eps), strict=False)
    words = [point.word for point in enumerate_cylinders(system, max(depth, n), cap=cap)]
    return words if depth else words[:1]


def canonical_rotation(word: str) -> str:
    return min(word[i:] + word[:i] for i in range(len(word)))


def apart_measure_family(
    system: SymbolicSystem,
    n: int,
    eps: Fraction,
    route: str = utils.DEFAULT_ROUTE,
    seed: int = 0,
    sampled_pairs: int = utils.DEFAULT_SAMPLED_PAIRS,
    enumeration_cap: int = utils.ENUMERATION_CAP,
) -> Certificate:
    """Pairwise apart measures from a maximum (n, eps)-separated word family.

    The `dirac` route takes the Dirac measures on the words, apart at horizon n. The `periodic`
    route closes each word into a periodic point with a connector of the system's specification
    gap n_0 (empty for a full shift), takes the invariant measures on the resulting orbits,
    merges words that land on the same orbit, and claims apartness at horizon n + n_0.

    Raises:
        NonMixingError: when the periodic route is asked for a non-mixing SFT.
        VerificationError: when two family members are not apart.
    """
    eps = Fraction(eps)
    words = separated_words(system, n, eps, cap=enumeration_cap)
    metadata: typing.Dict[str, typing.Any] = {"route": route, "words": len(words)}

    if route == utils.DIRAC:
        horizon = n
        witnesses = [DiscreteMeasure([(word, 1)], system) for word in words]
    elif route == utils.PERIODIC:
        gap = system.specification_gap()
        horizon = n + gap
        orbits: typing.Dict[str, DiscreteMeasure] = {}
        for word in words:
            last, first = utils.symbol_index(word[-1]), utils.symbol_index(word[0])
            period = word + system.connector_of_length(last, first, gap)
            key = canonical_rotation(period)
            if key not in orbits:
                orbits[key] = periodic_orbit_measure(period, system, resolution=len(period))
        witnesses = [orbits[key] for key in sorted(orbits)]
        metadata.update({"gap": gap, "period": len(words[0]) + gap, "orbits": len(witnesses)})
    else:
        raise ValueError(f"unknown route {route!r}")

    mode, pairs = select_pairs(len(witnesses), seed, sampled_pairs)
    records = []
    for i, j in pairs:
        distance = min(
            _prefix_distance(system, a, b, horizon) for a in witnesses[i].words for b in witnesses[j].words
        )
        if distance < eps:
            raise VerificationError(f"measures {i} and {j} are at support distance {distance} < {eps}", pair=(i, j))
        records.append(PairRecord(pair=(i, j), distance=distance))

    logger.info(f"Apart family ({route}): {len(witnesses)} measures at horizon {horizon}, eps {eps}")
    return Certificate(
        kind=utils.APART_MEASURES,
        system=system,
        n=horizon,
        eps=eps,
        witnesses=list(witnesses),
        verification=VerificationRecord(mode=mode, pairs=records, seed=seed if mode == SAMPLED else None),
        metadata=metadata,
    )


def hamming_measure_family(
    base: Certificate,
    code: HammingCodebook,
    seed: int = 0,
    sampled_pairs: int = utils.DEFAULT_SAMPLED_PAIRS,
) -> Certificate:
    """The measures μ_φ = (2/N) Σ_{φ(i)=1} ν_i over the first N apart base measures ν_i.

    Two of them disagree on Hamm(φ1, φ2)/2 base measures, each carrying 2/N, so at least
    Hamm/N > 1/4 of the mass travels at least eps: W_1^n >= eps Hamm / N > eps / 4.

    Raises:
        ValueError: when the base is not an apart family or is smaller than the code length.
        VerificationError: when a checked pair falls below the predicted bound.
    """
    if base.kind != utils.APART_MEASURES:
        raise ValueError(f"base must be an apart family, got {base.kind}")
    if base.size < code.N:
        raise ValueError(f"base of {base.size} measures is too small for a code of length {code.N}")

    weight = Fraction(2, code.N)
    bases = typing.cast(typing.List[DiscreteMeasure], base.witnesses)
    witnesses = [
        DiscreteMeasure.mix([bases[i] for i in code.support(index)], [weight] * (code.N // 2))
        for index in range(code.size)
    ]

    mode, pairs = select_pairs(len(witnesses), seed, sampled_pairs)
    records = []
    for i, j in pairs:
        bound = base.eps * Fraction(code.hamming(i, j), code.N)
        distance = ultrametric_wasserstein(witnesses[i], witnesses[j], 1, base.n).cost
        if distance < bound or distance <= base.eps / 4:
            raise VerificationError(f"W_1^{base.n} of pair ({i}, {j}) is {distance}, below {bound}", pair=(i, j))
        records.append(PairRecord(pair=(i, j), distance=distance, bound=bound))

    logger.info(f"Hamming family: {len(witnesses)} measures from a length {code.N} code")
    return Certificate(
        kind=utils.SEPARATED_MEASURES,
        system=base.system,
        n=base.n,
        eps=base.eps / 4,
        witnesses=list(witnesses),
        verification=VerificationRecord(mode=mode, pairs=records, seed=seed if mode == SAMPLED else None),
        metadata={"code_length": code.N, "code_size": code.size, "base_size": base.size, "base": base.metadata},
    )


def _directed_excursion(
    system: SymbolicSystem, left: FiniteClosedSet, right: FiniteClosedSet, n: int
) -> typing.Tuple[Fraction, str]:
    best = Fraction(-1)
    witness = left.words[0]
    for a in left:
        gap = min(_prefix_distance(system, a, b, n) for b in right)
        if gap > best:
            best, witness = gap, a
    return best, witness


def hyperspace_family(
    system: SymbolicSystem,
    base: typing.Sequence[typing.Union[str, FiniteClosedSet]],
    code: HammingCodebook,
    n: int,
    eps: Fraction,
    direction: str = "separated",
    seed: int = 0,
    sampled_pairs: int = utils.DEFAULT_SAMPLED_PAIRS,
) -> Certificate:
    """The sets B_φ built from a code over N separated points (or N split sets).

    `separated`: B_φ = {x_i : φ(i) = 1} over pairwise (n, eps)-separated words.
    `split`: B_φ is the union of the B_i with φ(i) = 1 over pairwise (n, eps)-split sets; unions of
    f-invariant orbit sets stay f-invariant.

    In both cases some x in B_φ1 (from an index with φ1 = 1, φ2 = 0) is farther than eps from
    all of B_φ2, so H^n(B_φ1, B_φ2) > eps; the record keeps that witnessing point.

    Raises:
        ValueError: when the base is smaller than the code length.
        VerificationError: when the base is not separated (or split) or a pair is not separated.
    """
    eps = Fraction(eps)
    if len(base) < code.N:
        raise ValueError(f"base of {len(base)} elements is too small for a code of length {code.N}")
    base = list(base[: code.N])

    if direction == "separated":
        words = typing.cast(typing.List[str], base)
        for i, j in itertools.combinations(range(len(words)), 2):
            if _prefix_distance(system, words[i], words[j], n) <= eps:
                raise VerificationError(f"base points {i} and {j} are not ({n}, {eps})-separated", pair=(i, j))
        witnesses = [FiniteClosedSet([words[i] for i in code.support(index)], system) for index in range(code.size)]
        kind = utils.SEPARATED_SETS
    elif direction == "split":
        sets = typing.cast(typing.List[FiniteClosedSet], base)
        for i, j in itertools.combinations(range(len(sets)), 2):
            gap = min(_prefix_distance(system, a, b, n) for a in sets[i] for b in sets[j])
            if gap <= eps:
                raise VerificationError(f"base sets {i} and {j} are not ({n}, {eps})-split", pair=(i, j))
        witnesses = []
        for index in range(code.size):
            union = sets[code.support(index)[0]]
            for i in code.support(index)[1:]:
                union = union.union(sets[i])
            witnesses.append(union)
        kind = utils.SPLIT_SETS
    else:
        raise ValueError(f"direction must be separated or split, got {direction!r}")

    mode, pairs = select_pairs(len(witnesses), seed, sampled_pairs)
    records = []
    for i, j in pairs:
        forward, forward_point = _directed_excursion(system, witnesses[i], witnesses[j], n)
        backward, backward_point = _directed_excursion(system, witnesses[j], witnesses[i], n)
        distance, point = (forward, forward_point) if forward >= backward else (backward, backward_point)
        if distance <= eps:
            raise VerificationError(f"sets {i} and {j} are at H^{n} = {distance} <= {eps}", pair=(i, j))
        records.append(PairRecord(pair=(i, j), distance=distance, witness=point))

    metadata: typing.Dict[str, typing.Any] = {"direction": direction, "code_length": code.N, "code_size": code.size}
    if direction == "split":
        metadata["invariant"] = all(witness.resolution > 1 and witness.is_invariant() for witness in witnesses)
    logger.info(f"Hyperspace family ({direction}): {len(witnesses)} sets from a length {code.N} code")
    return Certificate(
        kind=kind,
        system=system,
        n=n,
        eps=eps,
        witnesses=list(witnesses),
        verification=VerificationRecord(mode=mode, pairs=records, seed=seed if mode == SAMPLED else None),
        metadata=metadata,
    )


def orbit_sets(family: Certificate) -> typing.List[FiniteClosedSet]:
    """Supports of a periodic apart family as f-invariant closed sets."""
    return [FiniteClosedSet(witness.words, family.system) for witness in family.witnesses]  # type: ignore[union-attr]
