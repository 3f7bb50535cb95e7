"""Regroups global constants."""

import os
import typing
from fractions import Fraction

ALPHABET = "0123456789abcdefghijklmnopqrstuvwxyz"
MAX_ALPHABET_SIZE = len(ALPHABET)

DEFAULT_LAMBDA = Fraction(1, 2)

BOWEN = "bowen"
MEAN = "mean"
VALID_MODES = (BOWEN, MEAN)

# distance kinds understood by counting views
D = "d"
D_N = "d_n"
D_MEAN = "mean"
W1 = "W1"
W1_N = "W1n"
LP = "LP"
LP_N = "LPn"
H = "H"
H_N = "Hn"
VALID_DISTANCES = (D, D_N, D_MEAN, W1, W1_N, LP, LP_N, H, H_N)

VALID_P = (1, 2, 3)

GREEDY = "greedy"
EXACT = "exact"
VALID_STRATEGIES = (GREEDY, EXACT)

# apart family routes
DIRAC = "dirac"
PERIODIC = "periodic"
VALID_ROUTES = (DIRAC, PERIODIC)
DEFAULT_ROUTE = DIRAC

LEXICOGRAPHIC = "lexicographic"
RANDOM = "random"

# report modes
ENTROPY = "entropy"
ENTROPY_ORDER = "entropy_order"
METRIC_ORDER = "metric_order"
BOX_DIMENSION = "box_dimension"

# certificate kinds
APART_MEASURES = "apart_measures"
SEPARATED_MEASURES = "separated_measures"
SEPARATED_SETS = "separated_sets"
SPLIT_SETS = "split_sets"
VALID_CERTIFICATE_KINDS = (APART_MEASURES, SEPARATED_MEASURES, SEPARATED_SETS, SPLIT_SETS)

FULL_SHIFT = "full_shift"
SFT = "sft"

# caps
ENUMERATION_CAP = 2**26
EXACT_CAP = 20
CODE_CAP = 64
GREEDY_CODE_CAP = 16
GRID_CAP = 2**20
DEFAULT_RESTARTS = 8
DEFAULT_SAMPLED_PAIRS = 50
DEFAULT_CODE_LIMIT = 4096
# certificates record every pair up to this many, a seeded sample beyond
FULL_PAIR_LIMIT = 4096

# exit codes
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_VERIFICATION_FAILED = 2
EXIT_RESOURCE_CAP = 3
EXIT_USAGE = 64
EXIT_MALFORMED_SPEC = 65

CACHE_ENV_VAR = "EMERGENCE_LAB_CACHE"


def cache_dir() -> typing.Optional[str]:
    """Directory for cached distance matrices, or None when caching is off."""
    return os.getenv(CACHE_ENV_VAR) or None


def format_rational(value: Fraction) -> str:
    """Render a rational as the "p/q" string used in every artifact."""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def parse_rational(value: typing.Union[str, int, Fraction]) -> Fraction:
    return Fraction(value)


def symbol_index(symbol: str) -> int:
    return ALPHABET.index(symbol)
