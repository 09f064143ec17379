"""Exception hierarchy shared by all modules."""


class LSDeficitError(Exception):
    """Base class for errors raised by this package."""


class SpecError(LSDeficitError, ValueError):
    """Malformed density specification or violated construction invariant."""


class UnsupportedFamilyError(LSDeficitError):
    """Operation requires a density family that was not supplied."""


class DegenerateConditioningError(LSDeficitError):
    """Conditioning on X_t requested at t = 0."""


class PreconditionError(LSDeficitError):
    """An operation's mathematical precondition does not hold."""


class ToleranceExceededError(LSDeficitError):
    """Quadrature did not reach the requested tolerance.

    Attributes
    ----------
    value : float
        Best value obtained.
    error : float
        Achieved error estimate.
    """

    def __init__(self, message, value=float("nan"), error=float("inf")):
        super().__init__(message)
        self.value = value
        self.error = error


class InequalityViolationError(LSDeficitError):
    """A checked inequality failed beyond tolerance (indicates a bug)."""
