"""Exception hierarchy shared by all modules."""


class ZPinchError(Exception):
    """Base class for toolkit failures."""


class ConfigError(ZPinchError, ValueError):
    pass


class NonpositiveIntegrand(ZPinchError, ValueError):
    """The magnetic-field integral went negative somewhere."""


class AdmissibilityViolation(ZPinchError, ValueError):
    pass


class AxisSingularity(ZPinchError, ArithmeticError):
    pass


class NoWitness(ZPinchError, RuntimeError):
    """A scan that must find a negative value did not."""


class QuadratureBlowup(ZPinchError, ArithmeticError):
    pass


class ConstraintViolation(ZPinchError, ValueError):
    pass


class BVPFailure(ZPinchError, RuntimeError):
    pass


class SolverStall(ZPinchError, RuntimeError):
    pass


class NonConvergedGrid(ZPinchError, RuntimeError):
    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


class StabilityViolation(ZPinchError, RuntimeError):
    pass


class InsufficientGrowth(ZPinchError, RuntimeError):
    pass


class SupportOverflow(ZPinchError, ValueError):
    pass


class SignFlip(ZPinchError, RuntimeError):
    pass


class MissingArtifact(ZPinchError, FileNotFoundError):
    pass
