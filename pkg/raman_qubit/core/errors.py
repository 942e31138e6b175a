"""Exception hierarchy.

Every error carries the process exit code the CLI should return for it, the
same way an HTTP handler error carries its status code.
"""

from __future__ import annotations

from typing import Any


class RamanError(Exception):
    """Base class for all errors raised by this package."""

    exit_code: int = 1


# ---------------------------------------------------------------------------
# Configuration errors (exit 2)
# ---------------------------------------------------------------------------


class ConfigError(RamanError):
    exit_code = 2


class UnknownCommandError(ConfigError):
    pass


class SchemaError(ConfigError):
    """A run specification does not validate; the message names the field."""

    def __init__(self, message: str, field: str | None = None) -> None:
        super().__init__(message)
        self.field = field


class DuplicateKeyError(SchemaError):
    pass


class UnitSuffixError(SchemaError):
    pass


class EmptyAxisError(ConfigError):
    def __init__(self, axis: str) -> None:
        super().__init__(f"sweep axis '{axis}' has no points")
        self.axis = axis


# ---------------------------------------------------------------------------
# Numerical errors (exit 3)
# ---------------------------------------------------------------------------


class NumericalError(RamanError):
    exit_code = 3


class DimensionMismatchError(NumericalError, ValueError):
    pass


class InvalidStateError(NumericalError, ValueError):
    """A density matrix violates trace, Hermiticity or positivity."""


class UnknownLevelError(NumericalError, KeyError):
    pass


class StepSizeUnderflowError(NumericalError):
    def __init__(self, time_ps: float, step_ps: float, detail: str) -> None:
        super().__init__(
            f"integrator step size underflow at t={time_ps:.6f} ps "
            f"(last step {step_ps:.3e} ps): {detail}"
        )
        self.time_ps = time_ps
        self.step_ps = step_ps


class NonUniformSamplingError(NumericalError, ValueError):
    pass


class FitError(NumericalError):
    pass


class CalibrationError(NumericalError):
    """Pi-condition search failed; `calibration` holds the best point found."""

    def __init__(self, message: str, calibration: Any = None) -> None:
        super().__init__(message)
        self.calibration = calibration


class UnbracketedOptimumError(CalibrationError):
    pass


class NoUsablePiConditionError(CalibrationError):
    pass


__all__ = [
    "RamanError",
    "ConfigError",
    "UnknownCommandError",
    "SchemaError",
    "DuplicateKeyError",
    "UnitSuffixError",
    "EmptyAxisError",
    "NumericalError",
    "DimensionMismatchError",
    "InvalidStateError",
    "UnknownLevelError",
    "StepSizeUnderflowError",
    "NonUniformSamplingError",
    "FitError",
    "CalibrationError",
    "UnbracketedOptimumError",
    "NoUsablePiConditionError",
]
