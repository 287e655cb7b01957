"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class MatPathError(Exception):
    """Base class for all errors raised by matpath."""

    exit_code = 2
    code = "error"


class InvalidMatrixError(MatPathError, ValueError):
    code = "invalid-matrix"


class DimensionMismatchError(MatPathError, ValueError):
    code = "dimension-mismatch"


class GraphStructureError(MatPathError, ValueError):
    code = "graph-structure"


class PathError(MatPathError, ValueError):
    code = "invalid-path"


class UsageError(MatPathError, ValueError):
    code = "usage"


class InfeasibleError(MatPathError):
    exit_code = 3
    code = "infeasible"


class OracleLimitError(MatPathError):
    exit_code = 3
    code = "oracle-limit"


class ConvergenceError(MatPathError, RuntimeError):
    exit_code = 4
    code = "convergence"

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InputError(MatPathError, ValueError):
    code = "input"
