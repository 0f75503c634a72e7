"""Exception hierarchy shared across the package."""


class MeanForceError(Exception):
    """Base class for all package errors."""


class UsageError(MeanForceError, ValueError):
    """A caller violated a documented precondition."""


class NumericalError(MeanForceError, ArithmeticError):
    """A numerical contract failed (non-convergence, consistency check)."""


class DomainError(MeanForceError, ArithmeticError):
    """Input outside the mathematical domain of an operation."""


class InsufficientDataError(MeanForceError, ValueError):
    """Not enough usable data points for a fit."""
