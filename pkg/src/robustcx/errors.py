"""Exception hierarchy. Each family maps to a distinct CLI exit code."""


class RobustCXError(Exception):
    """Base class for all library errors."""


class ConfigError(RobustCXError):
    """Malformed or unknown configuration input."""


class PreconditionError(RobustCXError):
    """An operation was called outside its domain."""


class DomainError(PreconditionError):
    pass


class StructuralError(PreconditionError):
    """Label sets or shapes do not line up."""


class RegimeError(PreconditionError):
    """Parameters fall in a regime the operation does not handle."""


class AssumptionViolation(PreconditionError):
    """A modelling assumption (for example full support) fails."""


class Infeasible(PreconditionError):
    """A construction has no admissible solution; carries diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class NonConvergenceError(RobustCXError):
    """An iterative solver hit its iteration cap."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class InternalConsistencyError(RobustCXError):
    """Two independent computations of the same quantity disagree."""
