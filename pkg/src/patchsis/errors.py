"""Exception types shared across the engine."""


class PatchSISError(Exception):
    """Base class for all engine errors."""


class ParameterError(PatchSISError, ValueError):
    """Invalid parameter value or scenario constraint violation."""

    def __init__(self, field, message):
        super().__init__(message)
        self.field = field


class PreconditionError(PatchSISError, ValueError):
    """An operation was called outside its domain (e.g. division guard)."""


class ComputationError(PatchSISError):
    """A numerical procedure failed; ``code`` is a stable machine-readable tag."""

    code = "COMPUTATION_FAILED"


class NonConvergedError(ComputationError):
    code = "NON_CONVERGED"


class SingularJacobianError(ComputationError):
    code = "SINGULAR_JACOBIAN"


class StructureViolationError(ComputationError):
    code = "STRUCTURE_VIOLATION"


class EigenNoConvergenceError(ComputationError):
    code = "NO_CONVERGENCE"


class BranchLostError(ComputationError):
    code = "BRANCH_LOST"

    def __init__(self, message, last_value):
        super().__init__(message)
        self.last_value = last_value


class BlewUpError(ComputationError):
    code = "BLEW_UP"


class ConfigError(PatchSISError, ValueError):
    """Malformed or invalid run configuration; ``path`` locates the offending key."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
