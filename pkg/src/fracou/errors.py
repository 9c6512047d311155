"""Exception hierarchy shared by every fracou module."""


class FracOUError(Exception):
    """Base class for all library errors."""


class DomainError(FracOUError, ValueError):
    """A parameter or argument lies outside the supported domain."""


class SingularityError(DomainError):
    """A kernel was evaluated exactly on one of its singular points."""


class NonStationaryDriverError(DomainError):
    """A stationary quantity was requested for a driver without stationary increments."""


class UnsupportedProcessError(DomainError):
    """The requested operation is not defined for this process family."""


class QuadratureError(FracOUError, ArithmeticError):
    """Adaptive quadrature failed to reach its tolerance.

    The best estimate and the achieved error bound are kept on the instance so
    callers can decide whether the result is still usable.
    """

    def __init__(self, message, value=float("nan"), est_error=float("inf")):
        super().__init__(f"{message} (value={value!r}, achieved error={est_error!r})")
        self.value = value
        self.est_error = est_error


class NotPositiveDefiniteError(FracOUError, ArithmeticError):
    """A covariance matrix could not be factorized within the jitter budget."""
