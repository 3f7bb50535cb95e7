"""Symbolic dynamical systems, cylinder points and the metrics d, d_n and the mean metric."""

from __future__ import annotations

import collections
import logging
import math
import typing
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from emergence_lab import utils
from emergence_lab.errors import (
    IllegalSymbolError,
    MismatchedSystemsError,
    NonMixingError,
    ResourceLimitError,
    SystemSpecError,
    WordTooShortError,
)

logger = logging.getLogger(__name__)

Transitions = typing.Tuple[typing.Tuple[bool, ...], ...]


class Distance(typing.NamedTuple):
    """A distance together with the flag telling whether the symbols available determine it."""

    value: Fraction
    exact: bool


@dataclass(frozen=True)
class SymbolicSystem:
    """A full shift or a subshift of finite type on m symbols with the λ-ultrametric.

    !!! Example
        ```python
        from emergence_lab.systems import SymbolicSystem

        golden_mean = SymbolicSystem(m=2, transitions=((True, True), (True, False)))
        golden_mean.count_words(3)  # 5
        ```

    Args:
        m: Alphabet size, at least 2.
        transitions: Optional m×m boolean matrix of allowed transitions, None for the full shift.
        lam: Contraction base λ in (0, 1).
    """

    m: int
    transitions: typing.Optional[Transitions] = None
    lam: Fraction = utils.DEFAULT_LAMBDA
    _powers: typing.Dict[int, Fraction] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not isinstance(self.m, int) or self.m < 2:
            raise SystemSpecError(f"alphabet size must be an integer >= 2, got {self.m}")
        if self.m > utils.MAX_ALPHABET_SIZE:
            raise SystemSpecError(f"alphabet size is limited to {utils.MAX_ALPHABET_SIZE}, got {self.m}")

        lam = Fraction(self.lam)
        if not 0 < lam < 1:
            raise SystemSpecError(f"lambda must lie in (0, 1), got {lam}")
        object.__setattr__(self, "lam", lam)

        if self.transitions is not None:
            matrix = tuple(tuple(bool(entry) for entry in row) for row in self.transitions)
            if len(matrix) != self.m or any(len(row) != self.m for row in matrix):
                raise SystemSpecError(f"transition matrix must be {self.m}x{self.m}")
            for symbol in range(self.m):
                if not any(matrix[symbol]):
                    raise SystemSpecError(f"symbol {symbol} has no successor")
                if not any(row[symbol] for row in matrix):
                    raise SystemSpecError(f"symbol {symbol} has no predecessor")
            if all(all(row) for row in matrix):
                matrix = None  # type: ignore[assignment]
            object.__setattr__(self, "transitions", matrix)

    @property
    def is_full_shift(self) -> bool:
        return self.transitions is None

    @property
    def diameter(self) -> Fraction:
        # two distinct first symbols always exist, so the ultrametric attains λ^0
        return Fraction(1)

    @property
    def symbols(self) -> str:
        return utils.ALPHABET[: self.m]

    def power(self, exponent: int) -> Fraction:
        """λ^exponent, cached."""
        value = self._powers.get(exponent)
        if value is None:
            value = self.lam**exponent
            self._powers[exponent] = value
        return value

    def allowed(self, a: int, b: int) -> bool:
        if self.transitions is None:
            return True
        return self.transitions[a][b]

    def adjacency(self) -> np.ndarray:
        """The transition matrix as an integer numpy array."""
        if self.transitions is None:
            return np.ones((self.m, self.m), dtype=np.int64)
        return np.array(self.transitions, dtype=np.int64)

    def check_word(self, word: str) -> None:
        """Raise IllegalSymbolError unless the word is admissible."""
        if not word:
            raise WordTooShortError("words must be nonempty")
        previous = None
        for position, symbol in enumerate(word):
            index = utils.ALPHABET.find(symbol)
            if index < 0 or index >= self.m:
                raise IllegalSymbolError(
                    f"symbol {symbol!r} at position {position} is not in the alphabet of size {self.m}"
                )
            if previous is not None and not self.allowed(previous, index):
                raise IllegalSymbolError(
                    f"transition {word[position - 1]}->{symbol} at position {position} is forbidden"
                )
            previous = index

    def is_admissible(self, word: str) -> bool:
        try:
            self.check_word(word)
        except (IllegalSymbolError, WordTooShortError):
            return False
        return True

    def is_cyclically_admissible(self, word: str) -> bool:
        if not self.is_admissible(word):
            return False
        return self.allowed(utils.symbol_index(word[-1]), utils.symbol_index(word[0]))

    def point(self, word: str) -> CylinderPoint:
        return CylinderPoint(word, self)

    def count_words(self, length: int) -> int:
        """Number of admissible words of the given length (sum of the entries of A^(L-1))."""
        if length < 0:
            raise ValueError(f"length must be >= 0, got {length}")
        if length == 0:
            return 1
        if self.transitions is None:
            return self.m**length
        return _count_words(self.transitions, length)

    def spectral_radius(self) -> float:
        """Largest absolute eigenvalue of the transition matrix."""
        eigenvalues = np.linalg.eigvals(self.adjacency().astype(float))
        return float(np.max(np.abs(eigenvalues)))

    def topological_entropy(self) -> float:
        """The transfer-matrix oracle log ρ(A)."""
        return math.log(self.spectral_radius())

    def is_mixing(self) -> bool:
        """True when the transition matrix is primitive (some power is strictly positive)."""
        if self.transitions is None:
            return True
        adjacency = self.adjacency()
        # Wielandt: primitive iff A^((m-1)^2+1) > 0
        exponent = (self.m - 1) ** 2 + 1
        current = np.minimum(adjacency, 1)
        for _ in range(exponent - 1):
            current = np.minimum(current @ adjacency, 1)
        return bool(np.all(current > 0))

    def connector(self, a: int, b: int) -> str:
        """Shortest word u such that a·u·b is admissible (breadth-first in the transition graph)."""
        if self.allowed(a, b):
            return ""
        parents: typing.Dict[int, typing.Optional[int]] = {}
        queue = collections.deque()
        for successor in range(self.m):
            if self.allowed(a, successor):
                parents[successor] = None
                queue.append(successor)
        while queue:
            symbol = queue.popleft()
            if self.allowed(symbol, b):
                path = [symbol]
                while parents[path[-1]] is not None:
                    path.append(parents[path[-1]])  # type: ignore[arg-type]
                return "".join(utils.ALPHABET[s] for s in reversed(path))
            for successor in range(self.m):
                if self.allowed(symbol, successor) and successor not in parents:
                    parents[successor] = symbol
                    queue.append(successor)
        raise NonMixingError(f"no path from symbol {a} to symbol {b}")

    def mixing_gap(self) -> int:
        """The specification constant n_0: longest shortest connector over all symbol pairs."""
        if not self.is_mixing():
            raise NonMixingError("transition matrix is not primitive")
        return max(len(self.connector(a, b)) for a in range(self.m) for b in range(self.m))

    def specification_gap(self) -> int:
        """Smallest k >= mixing_gap such that every pair a, b admits a connector of length exactly k.

        Periodic points closed with connectors of this length all share one period, which keeps
        distinct orbits at distance 1 over a full period.
        """
        gap = self.mixing_gap()
        adjacency = self.adjacency()
        power = np.linalg.matrix_power(np.minimum(adjacency, 1), gap + 1)
        while not np.all(power > 0):
            gap += 1
            power = np.minimum(power @ adjacency, 1)
        return gap

    def connector_of_length(self, a: int, b: int, length: int) -> str:
        """Lexicographically smallest word u of the given length such that a·u·b is admissible."""
        adjacency = np.minimum(self.adjacency(), 1)
        # reach[k][s] tells whether b can be reached from s in exactly k steps
        reach = [np.eye(self.m, dtype=np.int64)[:, b]]
        for _ in range(length):
            reach.append(np.minimum(adjacency @ reach[-1], 1))

        word = ""
        previous = a
        for position in range(length):
            remaining = length - position
            choice = next(
                (s for s in range(self.m) if self.allowed(previous, s) and reach[remaining][s]),
                None,
            )
            if choice is None:
                raise NonMixingError(f"no connector of length {length} from symbol {a} to symbol {b}")
            word += utils.ALPHABET[choice]
            previous = choice
        if not self.allowed(previous, b):
            raise NonMixingError(f"no connector of length {length} from symbol {a} to symbol {b}")
        return word

    def extend(self, word: str, length: int) -> str:
        """Extend an admissible word to the given length with its smallest admissible continuation."""
        extended = word
        while len(extended) < length:
            last = utils.symbol_index(extended[-1])
            successor = next(s for s in range(self.m) if self.allowed(last, s))
            extended += utils.ALPHABET[successor]
        return extended

    def ball_depth(self, n: int, eps: Fraction, strict: bool = True) -> int:
        """Cylinder depth D such that the d_n-ball of radius eps around x is the depth-D cylinder of x.

        d_n(x, y) = λ^max(0, j-n+1) with j the first disagreement, so a ball is always a cylinder.
        Returns 0 when the ball is the whole space.
        """
        threshold = _threshold_exponent(self, Fraction(eps), strict)
        if threshold == 0:
            return 0
        return n - 1 + threshold

    def spanning_count(self, n: int, eps: Fraction) -> int:
        """N(f, n, eps) with the strict convention d_n < eps."""
        return self.count_words(self.ball_depth(n, eps, strict=True))

    def closed_ball_count(self, n: int, eps: Fraction) -> int:
        """Minimal number of closed balls d_n <= eps covering X."""
        return self.count_words(self.ball_depth(n, eps, strict=False))

    def separated_count(self, n: int, eps: Fraction) -> int:
        """S(f, n, eps): largest family with pairwise d_n > eps."""
        # d_n > eps fails exactly inside closed eps-balls, which partition X
        return self.closed_ball_count(n, eps)

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        data: typing.Dict[str, typing.Any] = {
            "type": utils.FULL_SHIFT if self.is_full_shift else utils.SFT,
            "m": self.m,
            "lambda": utils.format_rational(self.lam),
        }
        if self.transitions is not None:
            data["transitions"] = [[int(entry) for entry in row] for row in self.transitions]
        return data

    @classmethod
    def from_dict(cls, data: typing.Mapping[str, typing.Any]) -> SymbolicSystem:
        """Build a system from its file representation (already validated against the system format)."""
        kind = data.get("type", utils.FULL_SHIFT)
        transitions = data.get("transitions")
        if kind == utils.SFT and transitions is None:
            raise SystemSpecError("an sft needs a transition matrix")
        if kind == utils.FULL_SHIFT and transitions is not None:
            raise SystemSpecError("a full shift takes no transition matrix")
        try:
            lam = utils.parse_rational(data.get("lambda", utils.DEFAULT_LAMBDA))
        except (ValueError, ZeroDivisionError) as err:
            raise SystemSpecError(f"lambda {data.get('lambda')!r} is not a rational") from err
        matrix = None if transitions is None else tuple(tuple(bool(entry) for entry in row) for row in transitions)
        return cls(m=data["m"], transitions=matrix, lam=lam)


@lru_cache(maxsize=1024)
def _count_words(transitions: Transitions, length: int) -> int:
    # object dtype keeps python integers, so counts never overflow
    matrix = np.array([[int(entry) for entry in row] for row in transitions], dtype=object)
    vector = np.ones(len(transitions), dtype=object)
    for _ in range(length - 1):
        vector = matrix @ vector
    return int(sum(vector))


def _threshold_exponent(system: SymbolicSystem, eps: Fraction, strict: bool) -> int:
    """Smallest t >= 0 with λ^t < eps (strict) or λ^t <= eps."""
    if eps <= 0:
        raise ValueError(f"epsilon must be positive, got {eps}")
    exponent = 0
    while True:
        value = system.power(exponent)
        if (value < eps) if strict else (value <= eps):
            return exponent
        exponent += 1


@dataclass(frozen=True)
class CylinderPoint:
    """The cylinder of all sequences starting with `word`, standing in for a point of X.

    Args:
        word: Admissible word of length >= 1.
        system: The system the word lives in.
    """

    word: str
    system: SymbolicSystem = field(repr=False)

    def __post_init__(self) -> None:
        self.system.check_word(self.word)

    def __len__(self) -> int:
        return len(self.word)

    def __str__(self) -> str:
        return self.word


@dataclass(frozen=True)
class BowenContext:
    """Time horizon n and the dynamical metric it selects.

    Args:
        n: Horizon, at least 1.
        mode: `bowen` for d_n = max of d along the orbit, `mean` for the average.
    """

    n: int = 1
    mode: str = utils.BOWEN

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.n}")
        if self.mode not in utils.VALID_MODES:
            raise ValueError(f"mode must be one of {utils.VALID_MODES}, got {self.mode!r}")


def _check_same_system(x: CylinderPoint, y: CylinderPoint) -> None:
    if x.system is not y.system and x.system != y.system:
        raise MismatchedSystemsError("points belong to different systems")


def first_disagreement(a: str, b: str) -> typing.Optional[int]:
    """Index of the first differing symbol on the overlap, or None."""
    for index, (left, right) in enumerate(zip(a, b)):
        if left != right:
            return index
    return None


def base_distance(x: CylinderPoint, y: CylinderPoint) -> Distance:
    """d(x, y) = λ^j with j the first disagreement.

    Words that agree on their overlap give 0; the result is exact only when they are identical.
    """
    _check_same_system(x, y)
    index = first_disagreement(x.word, y.word)
    if index is None:
        return Distance(Fraction(0), x.word == y.word)
    return Distance(x.system.power(index), True)


def bowen_distance(x: CylinderPoint, y: CylinderPoint, ctx: typing.Optional[BowenContext] = None) -> Distance:
    """The n-th Bowen metric d_n, or the mean metric when `ctx.mode` is `mean`.

    Args:
        x: First point
        y: Second point
        ctx: Horizon and mode. Defaults to n = 1, which is the base metric.

    Returns:
        Distance with the exactness flag; inexact whenever a word is shorter than n.
    """
    ctx = ctx or BowenContext()
    _check_same_system(x, y)
    if ctx.mode == utils.MEAN:
        return _mean_distance(x, y, ctx.n)

    n = ctx.n
    long_enough = min(len(x.word), len(y.word)) >= n
    index = first_disagreement(x.word, y.word)
    if index is None:
        return Distance(Fraction(0), x.word == y.word)
    return Distance(x.system.power(max(0, index - n + 1)), long_enough)


def _mean_distance(x: CylinderPoint, y: CylinderPoint, n: int) -> Distance:
    if min(len(x.word), len(y.word)) < n:
        total = Fraction(0)
        for i in range(min(n, len(x.word), len(y.word))):
            total += _word_distance(x.system, x.word[i:], y.word[i:]).value
        return Distance(total / n, False)

    total = Fraction(0)
    exact = True
    for i in range(n):
        part = _word_distance(x.system, x.word[i:], y.word[i:])
        total += part.value
        exact = exact and part.exact
    return Distance(total / n, exact)


def _word_distance(system: SymbolicSystem, a: str, b: str) -> Distance:
    index = first_disagreement(a, b)
    if index is None:
        return Distance(Fraction(0), a == b)
    return Distance(system.power(index), True)


def shift(x: CylinderPoint) -> CylinderPoint:
    """Apply the shift σ: drop the first symbol."""
    if len(x.word) < 2:
        raise WordTooShortError(f"cannot shift word {x.word!r} of length {len(x.word)}")
    return CylinderPoint(x.word[1:], x.system)


def enumerate_cylinders(
    system: SymbolicSystem, length: int, cap: int = utils.ENUMERATION_CAP
) -> typing.Iterator[CylinderPoint]:
    """Yield every admissible word of the given length in lexicographic order.

    Raises:
        ResourceLimitError: when the number of words exceeds `cap`.
    """
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    total = system.count_words(length)
    if total > cap:
        raise ResourceLimitError(f"{total} cylinders of length {length} exceed the enumeration cap {cap}")
    logger.debug(f"Enumerating {total} cylinders of length {length}")

    for word in _admissible_words(system, length):
        yield CylinderPoint(word, system)


def _admissible_words(system: SymbolicSystem, length: int) -> typing.Iterator[str]:
    stack: typing.List[str] = [utils.ALPHABET[s] for s in reversed(range(system.m))]
    while stack:
        word = stack.pop()
        if len(word) == length:
            yield word
            continue
        last = utils.symbol_index(word[-1])
        for successor in reversed(range(system.m)):
            if system.allowed(last, successor):
                stack.append(word + utils.ALPHABET[successor])


def full_shift(m: int, lam: Fraction = utils.DEFAULT_LAMBDA) -> SymbolicSystem:
    return SymbolicSystem(m=m, lam=Fraction(lam))


def golden_mean(lam: Fraction = utils.DEFAULT_LAMBDA) -> SymbolicSystem:
    """The subshift forbidding "11"."""
    return SymbolicSystem(m=2, transitions=((True, True), (True, False)), lam=Fraction(lam))
