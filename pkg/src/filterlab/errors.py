"""Exception types shared across the package."""


class FilterlabError(Exception):
    """Base class for all filterlab errors."""


class ValidationError(FilterlabError, ValueError):
    """Invalid input data: bad dimensions, broken invariants, malformed configs."""


class NumericalError(FilterlabError, RuntimeError):
    """Numerical failure: indefinite matrices, divergence, unstable recursions."""


class ConvergenceError(NumericalError):
    """An iterative solver exhausted its sweep budget before reaching tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual
