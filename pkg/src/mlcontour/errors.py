"""Exception hierarchy shared across the package."""


class MLContourError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(MLContourError, ValueError):
    """Bad user input: invalid model parameters, shapes, or flag combinations."""


class NumericalError(MLContourError, ArithmeticError):
    """A computation could not be carried out to the requested standard."""


class SingularShift(NumericalError):
    """A shifted tridiagonal system had a pivot below the underflow threshold."""

    def __init__(self, message, index=None, node=None):
        super().__init__(message)
        self.index = index
        self.node = node


class NotSymmetrizable(NumericalError):
    pass


class ConvergenceFailure(NumericalError):
    def __init__(self, message, angle=None):
        super().__init__(message)
        self.angle = angle


class AllNodesDropped(NumericalError):
    pass


class NodeBranchCut(NumericalError):
    pass


class DivergenceGuard(NumericalError):
    pass


class CancellationLoss(NumericalError):
    pass


class TrustRegionExceeded(NumericalError):
    pass


class StepUnderflow(NumericalError):
    pass


class AssumptionViolated(NumericalError):
    """A hypothesis of the parabolic field-of-values bound fails on the domain."""

    def __init__(self, message, which=None, x=None):
        super().__init__(message)
        self.which = which
        self.x = x


class NoWideningSuffices(NumericalError):
    def __init__(self, message, worst_node=None):
        super().__init__(message)
        self.worst_node = worst_node


class PathTooLong(NumericalError):
    pass
