"""Exception types shared across the package."""

from __future__ import annotations


class StepfracError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(StepfracError, ValueError):
    """Invalid configuration value or document.

    ``key`` names the offending configuration key when one is known.
    """

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class SolverError(StepfracError):
    """The static banded system could not be solved (singular or ill-posed)."""


class DivergenceError(StepfracError):
    """The explicit integrator produced a non-finite deflection."""

    def __init__(self, step_index: int, t: float):
        super().__init__(f"non-finite deflection at step {step_index} (t={t:.6g}); time step likely unstable")
        self.step_index = step_index
        self.t = t
