"""Run configuration shared by every command and echoed into each run manifest."""

from __future__ import annotations

import typing
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from emergence_lab import utils

CSV = "csv"
AVRO = "avro"
VALID_FORMATS = (CSV, AVRO)


def parse_range(value: str) -> typing.Tuple[int, int]:
    """Parse `a..b` (or a single integer) into an inclusive range.

    Raises:
        ValueError: when the range is empty or not made of integers.
    """
    low, sep, high = value.partition("..")
    start = int(low)
    stop = int(high) if sep else start
    if stop < start:
        raise ValueError(f"empty range {value!r}")
    return start, stop


@dataclass(frozen=True)
class Caps:
    """Resource caps; exceeding one either falls back to a bound or fails with exit code 3."""

    enumeration: int = utils.ENUMERATION_CAP
    exact: int = utils.EXACT_CAP
    code: int = utils.CODE_CAP
    code_limit: int = utils.DEFAULT_CODE_LIMIT
    grid: int = utils.GRID_CAP


@dataclass(frozen=True)
class RunConfig:
    """Everything a run depends on.

    Args:
        command: CLI command name
        system: Path of the system file
        n_range: Inclusive horizon range
        eps_exponents: Exponents k of the scales λ^k
        seed: Seed of every random choice
        caps: Resource caps
        output_dir: Directory the artifacts are written to
        format: Cell artifact format, csv or avro
        workers: Worker pool size for per-cell computations
        log_level: Logging level name
        options: Command specific parameters
    """

    command: str
    system: typing.Optional[str] = None
    n_range: typing.Tuple[int, int] = (1, 1)
    eps_exponents: typing.Tuple[int, ...] = (1,)
    seed: int = 0
    caps: Caps = field(default_factory=Caps)
    output_dir: str = "."
    format: str = CSV
    workers: int = 1
    log_level: str = "WARNING"
    options: typing.Dict[str, typing.Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        low, high = self.n_range
        if low < 1 or high < low:
            raise ValueError(f"n range must be nonempty and start at 1 or more, got {low}..{high}")
        if not self.eps_exponents or any(k < 1 for k in self.eps_exponents):
            raise ValueError(f"epsilon exponents must be positive, got {list(self.eps_exponents)}")
        if self.seed < 0:
            raise ValueError(f"seed must be unsigned, got {self.seed}")
        if self.format not in VALID_FORMATS:
            raise ValueError(f"format must be one of {VALID_FORMATS}, got {self.format!r}")
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")

    @property
    def horizons(self) -> range:
        return range(self.n_range[0], self.n_range[1] + 1)

    def eps_values(self, lam: Fraction) -> typing.List[Fraction]:
        """Scales λ^k, coarse to fine."""
        return [Fraction(lam) ** k for k in sorted(set(self.eps_exponents))]

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        data = asdict(self)
        data["n_range"] = list(self.n_range)
        data["eps_exponents"] = list(self.eps_exponents)
        data["options"] = {key: _plain(value) for key, value in sorted(self.options.items())}
        return data


def _plain(value: typing.Any) -> typing.Any:
    if isinstance(value, Fraction):
        return utils.format_rational(value)
    if isinstance(value, tuple):
        return [_plain(item) for item in value]
    return value
