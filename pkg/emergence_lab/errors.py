"""Exceptions exposed by the emergence_lab package."""

import typing

from emergence_lab import utils


class EmergenceLabError(Exception):
    """Base error for every failure raised by the library."""

    exit_code: int = utils.EXIT_FAILURE

    def __init__(self, message: str) -> None:
        self.message = message
        super().__init__(message)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(error={self.message})"

    def __str__(self) -> str:
        return self.message


class SystemSpecError(EmergenceLabError):
    """The symbolic system parameters violate their invariants."""

    exit_code = utils.EXIT_MALFORMED_SPEC


class MalformedSpecError(EmergenceLabError):
    """An input file does not match its format."""

    exit_code = utils.EXIT_MALFORMED_SPEC


class IllegalSymbolError(EmergenceLabError):
    """A word uses a symbol outside the alphabet or a forbidden transition."""


class MismatchedSystemsError(EmergenceLabError):
    """Two objects from different systems were compared."""


class WordTooShortError(EmergenceLabError):
    """A word is too short for the requested shift or horizon."""


class InexactDistanceError(EmergenceLabError):
    """A distance is not determined by the symbols available at this resolution."""


class CyclicAdmissibilityError(EmergenceLabError):
    """A word cannot be closed into a periodic point (last to first transition forbidden)."""


class NonMixingError(EmergenceLabError):
    """The transition matrix is not primitive, so no uniform connector exists."""


class InfeasibleCoverError(EmergenceLabError):
    """The candidate centres do not cover the viewed elements."""


class ResourceLimitError(EmergenceLabError):
    """A configured cap (enumeration, exact search, code length, grid size) was exceeded."""

    exit_code = utils.EXIT_RESOURCE_CAP


class VerificationError(EmergenceLabError):
    """A certificate or an inequality check failed."""

    exit_code = utils.EXIT_VERIFICATION_FAILED

    def __init__(self, message: str, pair: typing.Optional[typing.Tuple[int, int]] = None) -> None:
        """Failure of a verification step.

        Args:
            message: Message description
            pair: First failing witness pair, when the failure is pairwise. Defaults to None.
        """
        self.pair = pair
        super().__init__(message)


class UnknownCommandError(EmergenceLabError):
    """The CLI was asked for a command it does not know."""

    exit_code = utils.EXIT_USAGE


class SerializerError(EmergenceLabError):
    """An artifact could not be encoded or written."""
