"""Exception hierarchy shared by all optochaos modules."""


class OptochaosError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(OptochaosError, ValueError):
    """Channel counts or matrix shapes do not line up."""


class UnsupportedContentError(OptochaosError, ValueError):
    """A network carries Hamiltonian content the linear algebra cannot handle."""


class ResolutionError(OptochaosError, ValueError):
    """Integration step too coarse for the fastest rate of the system."""


class DivergenceError(OptochaosError, ArithmeticError):
    """Integration produced a non-finite state."""

    def __init__(self, time, message=None):
        self.time = float(time)
        super().__init__(message or f"non-finite state encountered at t = {self.time:.6g} us")


class InsufficientDataError(OptochaosError, ValueError):
    """Time series too short for the requested estimate."""


class DomainError(OptochaosError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class StepSizeError(OptochaosError, ValueError):
    """Requested ODE step violates the stability bound."""


class ConfigError(OptochaosError, ValueError):
    """Invalid run configuration; ``field`` names the offending key path."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)
