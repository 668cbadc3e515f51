"""Exception hierarchy shared by every module."""


class SphereFieldError(Exception):
    """Base class for all library errors."""


class DomainError(SphereFieldError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConvergenceError(SphereFieldError, ArithmeticError):
    """A quadrature or series failed its internal error estimate."""


class BudgetError(SphereFieldError, ArithmeticError):
    """A term budget was exhausted before the requested tolerance was met."""


class ConsistencyError(SphereFieldError, ArithmeticError):
    """A computed quantity violated an identity it must satisfy."""


class NumericalError(SphereFieldError, ArithmeticError):
    """A matrix or intermediate quantity has an impossible sign or shape."""


class FitError(SphereFieldError, ArithmeticError):
    """A regression residual is too large for the fitted model to be trusted."""


class ResolutionWarning(UserWarning):
    """The truncation multipole is too low to resolve a requested scale."""


class DivergenceWarning(UserWarning):
    """A derived spectrum would have infinite variance without truncation."""
