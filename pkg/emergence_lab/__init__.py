from . import errors, utils  # noqa
from .systems import SymbolicSystem, full_shift, golden_mean  # noqa

__version__ = "0.1.0"

__all__ = ["SymbolicSystem", "full_shift", "golden_mean"]
