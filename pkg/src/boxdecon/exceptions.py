"""Exception hierarchy shared by all boxdecon modules."""


class BoxDeconError(Exception):
    """Base class for errors raised by boxdecon."""

    #: short machine-readable tag used by the CLI error lines
    reason = "error"


class DimensionError(BoxDeconError, ValueError):
    """Array shapes or box widths are inconsistent."""

    reason = "dimension"


class CapacityError(BoxDeconError, ValueError):
    """A dense or combinatorial routine was asked for more than its guard allows."""

    reason = "capacity"


class PreconditionError(BoxDeconError, ValueError):
    """An input violates a documented precondition (e.g. not a kernel vector)."""

    reason = "precondition"


class InfeasibleError(BoxDeconError):
    """The measurement is not in the range of the operator.

    Attributes
    ----------
    residual : float
        Least-squares residual ``min_x ||op(x) - y||_inf`` found while checking.
    """

    reason = "infeasible"

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class SolverError(BoxDeconError):
    """The LP solver did not reach an optimal point. ``report`` holds its SolveReport."""

    reason = "solver"

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NumericalError(BoxDeconError, ArithmeticError):
    """An iterative method produced non-finite values. ``log`` holds the convergence log."""

    reason = "numerical"

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = log
