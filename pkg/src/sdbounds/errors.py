"""Exception hierarchy shared by every module."""


class SdBoundsError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(SdBoundsError, ValueError):
    """Malformed user input (maps to CLI exit code 2)."""


class InvalidMatrix(InvalidInput):
    pass


class DimMismatch(InvalidInput):
    pass


class NotPsd(InvalidInput):
    pass


class InvalidSensor(InvalidInput):
    pass


class InvalidBudget(InvalidInput):
    pass


class IndexOutOfRange(InvalidInput, IndexError):
    pass


class InvalidScalar(InvalidInput):
    pass


class InvalidDistribution(InvalidInput):
    pass


class Undefined(SdBoundsError, ZeroDivisionError):
    """r(rho, zeta) evaluated at rho == zeta**2."""


class Unbounded(SdBoundsError):
    """No finite rho satisfies Z <= rho E[Z] (a sensor escapes range(E[Z]))."""


class RangeViolation(Unbounded):
    pass


class InfeasibleParameters(SdBoundsError):
    """Parameter equalities cannot be met (maps to CLI exit code 4)."""


class InsufficientSamples(InfeasibleParameters):
    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class InvalidRefinement(InfeasibleParameters):
    pass


class TrivialLowerScale(InfeasibleParameters):
    pass


class HypothesisViolated(SdBoundsError):
    pass


class NoConvergence(SdBoundsError, ArithmeticError):
    def __init__(self, message, last=None, residual=None, iterations=None):
        super().__init__(message)
        self.last = last
        self.residual = residual
        self.iterations = iterations


class GenerationFailed(SdBoundsError):
    pass
