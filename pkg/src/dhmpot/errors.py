"""Exception hierarchy for dhmpot."""


class DhmError(Exception):
    """Base class for all errors raised by dhmpot."""


class ConfigurationError(DhmError, ValueError):
    """Invalid lattice, solver or run configuration."""


class DimensionError(ConfigurationError):
    """Unsupported domain dimension."""


class RetractionError(DhmError, ValueError):
    """Projection onto the target failed (near-zero ambient vector)."""

    def __init__(self, message, site=None):
        super().__init__(message)
        self.site = site


class ContractViolation(DhmError, ValueError):
    """An input violates a documented precondition (e.g. tangency)."""


class UnsupportedTarget(DhmError, NotImplementedError):
    """Operation is only defined for a subset of target manifolds."""


class NonCriticalPointError(DhmError, ValueError):
    """A critical point was required but the residual is too large."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SizeCapExceeded(DhmError, MemoryError):
    """Dense assembly requested beyond the desk-scale size cap."""


class ConvergenceError(DhmError, RuntimeError):
    """An iterative solver diverged or failed to converge."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class ConstructionUnavailable(DhmError, ValueError):
    """An uncoupled solution recipe cannot be realised for the given data."""
