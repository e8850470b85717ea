"""Exception classes.  The CLI maps each class to a fixed exit code."""


class LadderExitError(Exception):
    exit_code = 1


class ConfigError(LadderExitError, ValueError):
    """Bad law spec or command parameters."""

    exit_code = 2


class ConstructionError(ConfigError):
    """A law could not be built (normalisation or centering failed)."""


class IrreducibilityError(ConfigError):
    """Support of the increment does not generate the integers."""


class CapabilityError(LadderExitError, ValueError):
    """Quantity requested outside the regime where it exists (divergent
    moment, excluded stable parameters, non-summable integrand)."""

    exit_code = 3


class NumericError(LadderExitError, ArithmeticError):
    """Solver residual, quadrature remainder or iteration failed its target."""

    exit_code = 3


class ConvergenceError(NumericError):
    def __init__(self, msg, last=None):
        super().__init__(msg)
        self.last = last


class PrecisionError(NumericError):
    def __init__(self, msg, bound=None):
        super().__init__(msg)
        self.bound = bound


class InvariantViolation(LadderExitError, AssertionError):
    """An exact identity or the exit-probability upper bound failed."""

    exit_code = 4


class ResourceError(LadderExitError, MemoryError):
    exit_code = 5


class CircuitBreakerError(NumericError):
    """A simulated path exceeded the step budget."""


class InsufficientSampleError(NumericError):
    pass
