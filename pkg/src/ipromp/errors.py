"""Exception hierarchy shared by the planning modules."""


class IProMPError(Exception):
    """Base class for all package errors."""


class InvalidInputError(IProMPError, ValueError):
    """Argument outside the domain of an operation."""


class DegenerateTrajectoryError(InvalidInputError):
    """A demonstration whose goal coincides with its start."""


class InsufficientDataError(InvalidInputError):
    """Too few demonstrations or samples to estimate a model."""


class NumericalError(IProMPError, ArithmeticError):
    """Base class for failures of the linear algebra."""


class IllConditionedError(NumericalError):
    """Regression system is singular; use a positive regularizer."""


class SingularConditioningError(NumericalError):
    """Zero prior variance combined with a zero desired variance."""


class CovarianceRepairError(NumericalError):
    """Covariance has eigenvalues below the repair tolerance."""


class GeometryInfeasibleError(IProMPError):
    """Stem shorter than the clearance the push must create."""


class ScheduleOverflowError(InvalidInputError):
    """More push directives than free slots in the timing preset."""


class JamError(NumericalError):
    """A fruit would need more than a quarter turn to clear the gripper."""

    def __init__(self, message, fruit_id=None, tick=None):
        super().__init__(message)
        self.fruit_id = fruit_id
        self.tick = tick
