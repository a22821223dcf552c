"""Exception hierarchy for moistsolve."""

from __future__ import annotations


class MoistsolveError(Exception):
    """Base class for all package errors."""


class ConfigError(MoistsolveError):
    """Invalid, unknown or out-of-range configuration input."""


class DomainError(MoistsolveError):
    """Argument outside the mathematical domain of an operation."""


class IngestionError(MoistsolveError):
    """Malformed tabulated input (bad grid, times or values)."""


class NumericsError(MoistsolveError):
    """An iterative numerical procedure failed to converge."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NewtonError(NumericsError):
    """Inner Newton solve diverged or hit its iteration cap.

    ``diagnostics['residual_history']`` carries the max-norm residuals
    of every iteration attempted.
    """


class StepError(MoistsolveError):
    """A single implicit time step failed; carries the failing index."""

    def __init__(self, message: str, step_index: int, t: float,
                 cause: NewtonError | None = None):
        super().__init__(message)
        self.step_index = step_index
        self.t = t
        self.cause = cause


class WindowTooLargeError(MoistsolveError):
    """Picard iteration is not contracting on this window; shrink it."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class PicardIterationError(MoistsolveError):
    """Picard iteration cap reached without meeting the tolerance."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class MarchError(MoistsolveError):
    """Window continuation failed; no contracting window above window_min."""

    def __init__(self, message: str, schedule=None, report=None):
        super().__init__(message)
        self.schedule = schedule
        self.report = report
