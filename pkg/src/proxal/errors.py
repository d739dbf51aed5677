"""Exception types raised across the package."""


class ProxalError(Exception):
    """Base class for all package errors."""


class PreconditionViolated(ProxalError, ValueError):
    """An operation was called outside its admissible domain."""


class UnsupportedRegularizer(ProxalError):
    """No subgradient-distance rule exists for this regularizer kind."""


class LineSearchFailure(ProxalError):
    """Backtracking could not find an acceptable step."""


class NoConvergence(ProxalError):
    """An inner fixed-point iteration failed to converge."""


class MaxIterExceeded(ProxalError):
    """An iterative baseline hit its iteration cap.

    The last iterate is attached as ``x``.
    """

    def __init__(self, msg, x=None):
        super().__init__(msg)
        self.x = x


class StepSizeUnderflow(ProxalError):
    """The ODE integrator could not advance (step size underflow)."""


class NotHurwitz(ProxalError, ValueError):
    """A matrix required to be Hurwitz has an eigenvalue with Re >= 0."""


class NotSymmetric(ProxalError, ValueError):
    """A matrix required to be symmetric is not."""


class PlantNotBalanced(ProxalError, ValueError):
    pass


class PlantNotConnected(ProxalError, ValueError):
    pass


class SubsetBudgetExceeded(ProxalError):
    pass
