"""
Exception hierarchy for corrmfg.

Input problems derive from ValueError, mathematical non-convergence from
RuntimeError, so callers that only care about the broad category can catch the
builtin types.
"""


class CorrMFGError(Exception):
    """Base class of every error raised by corrmfg."""


class ModelValidationError(CorrMFGError, ValueError):
    """The model description violates one of its invariants."""


class AsymmetricKernelError(ModelValidationError):
    def __init__(self, message, permutation=None, index=None):
        super().__init__(message)
        self.permutation = permutation
        self.index = index


class NonStochasticKernelError(ModelValidationError):
    pass


class BadSimplexError(ModelValidationError):
    pass


class BadDiscountError(ModelValidationError):
    pass


class IndexOutOfRangeError(CorrMFGError, IndexError):
    pass


class HorizonMismatchError(CorrMFGError, ValueError):
    pass


class GridTooLargeError(CorrMFGError, ValueError):
    def __init__(self, message, node_count=None, cap=None):
        super().__init__(message)
        self.node_count = node_count
        self.cap = cap


class OracleTooLargeError(CorrMFGError, ValueError):
    pass


class RequiresN1Error(CorrMFGError, ValueError):
    pass


class SolverError(CorrMFGError, RuntimeError):
    """
    A solver stopped without meeting its tolerance.

    ``partial_solution`` holds whatever was computed before the failure, so a
    postmortem report can still be written.
    """

    def __init__(self, message, residual=None, partial_solution=None):
        super().__init__(message)
        self.residual = residual
        self.partial_solution = partial_solution


class NotConvergedError(SolverError):
    pass


class NoFixedPointFoundError(SolverError):
    def __init__(self, message, residual=None, stage=None, node=None, partial_solution=None):
        super().__init__(message, residual=residual, partial_solution=partial_solution)
        self.stage = stage
        self.node = node

    def locate(self, stage, node):
        """Return a copy of this error annotated with its stage and node."""
        located = NoFixedPointFoundError(
            f"no per-stage fixed point found at stage {stage}, node {node} "
            f"(best residual {self.residual:.3e})",
            residual=self.residual,
            stage=stage,
            node=node,
        )
        return located
