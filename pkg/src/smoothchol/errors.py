"""Exception types shared across the package."""


class SmoothCholError(Exception):
    """Base class for all package-specific errors."""


class InvalidFactorError(SmoothCholError):
    """A Cholesky factor violates its invariants (shape, positivity, finiteness)."""


class InvalidModelError(SmoothCholError):
    """A unit-triangular/variance decomposition violates its invariants."""


class InvalidCovarianceError(SmoothCholError):
    """A sample covariance is unusable (asymmetric, nonpositive diagonal, non-finite)."""


class NumericalError(SmoothCholError):
    """A numerical guarantee failed at runtime (descent violation, divergence)."""
