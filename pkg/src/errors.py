"""
Exception hierarchy for the lab.

The CLI maps ConfigError to exit code 1 and NumericalError to exit code 2;
see lab.py.
"""


class LabError(Exception):
    """Base class for every error raised by the lab."""

    exit_code = 2


class ConfigError(LabError, ValueError):
    """Invalid configuration or precondition violation."""

    exit_code = 1


class DomainError(ConfigError):
    """An argument lies outside the space-time domain."""


class OffGridError(DomainError):
    """A point requested from stored paths is not a grid point."""


class EstimatorError(ConfigError):
    """An estimator was asked for something its inputs cannot support."""


class NumericalError(LabError, ArithmeticError):
    """NaN, overflow, failed root bracketing or an inconsistent result."""

    exit_code = 2


class SpectralError(NumericalError):
    pass


class KernelTruncationError(NumericalError):
    def __init__(self, message: str, required_modes: int):
        super().__init__(message)
        self.required_modes = required_modes


class OracleError(NumericalError):
    pass


class ConditioningError(NumericalError):
    def __init__(self, message: str, condition: float = float("nan")):
        super().__init__(message)
        self.condition = condition


class SchemeDivergenceError(NumericalError):
    def __init__(self, message: str, step: int, replicate: int | None = None):
        super().__init__(message)
        self.step = step
        self.replicate = replicate


class PositivityError(NumericalError):
    pass
