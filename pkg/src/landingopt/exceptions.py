"""Exceptions shared across the toolkit."""


class RankDeficientError(ValueError):
    """Constraint differential (or a factored matrix) lost full rank."""


class NotPositiveDefiniteError(ValueError):
    """A matrix required to be symmetric positive definite is not."""


class MetricNotPDError(ValueError):
    """A metric restriction failed a positive-definiteness probe."""


class SingularHessianError(ValueError):
    """Reduced Hessian is not invertible within tolerance."""


class ValidationFailedError(ValueError):
    """A problem instance broke one of its derivative identities."""


class PropertyViolatedError(AssertionError):
    """An equivalence property exceeded its tolerance on some instance."""
