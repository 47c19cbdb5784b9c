"""Exception types shared across the package."""


class ProxboundError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(ProxboundError):
    """Operand dimensions are inconsistent."""


class DomainError(ProxboundError):
    """A point lies outside the domain of a penalty."""


class UnsupportedOperation(ProxboundError):
    """The requested operation is not available for this object."""


class InnerSolveError(ProxboundError):
    """An inner iterative solve hit its iteration cap or underflowed.

    Carries the last residual and iteration count so callers can report
    how far the solve got.
    """

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class InsufficientData(ProxboundError):
    """Too few accepted samples / tail points to produce an estimate."""


class ConfigError(ProxboundError):
    """Invalid experiment configuration. Collects every violation found."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
