"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class CapacityError(RuntimeError):
    """Requested order is too large even for log-scaled recurrences."""


class TruncationError(RuntimeError):
    """An internal series or matrix window did not converge.

    Carries the matrix position (n, p) with the worst residual when the
    failure comes from a kernel m-sum.
    """

    def __init__(self, message, n=None, p=None):
        super().__init__(message)
        self.n = n
        self.p = p


class ContractionError(RuntimeError):
    """1 - K is not positive definite: the kernel is not a contraction."""


class PrecisionError(RuntimeError):
    """A high-precision reference evaluation could not meet its tail bound."""
