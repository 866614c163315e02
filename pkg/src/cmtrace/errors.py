"""Exception types shared across the package."""


class CMTraceError(Exception):
    """Base class for all errors raised by cmtrace."""


class DomainError(CMTraceError, ValueError):
    """An argument lies outside the domain of the operation."""


class UnsupportedLevelError(CMTraceError, ValueError):
    """Only level 1 and prime levels are supported."""


class SpecError(CMTraceError, ValueError):
    """A function description is syntactically or semantically invalid."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class InsufficientOrderError(CMTraceError):
    """A q-expansion was not computed far enough for an exact coefficient."""


class PrecisionError(CMTraceError, ArithmeticError):
    """Adaptive precision ran out before the target accuracy was reached."""

    def __init__(self, message: str, achieved: float | None = None):
        self.achieved = achieved
        if achieved is not None:
            message = f"{message} (achieved error bound {achieved:.3e})"
        super().__init__(message)
