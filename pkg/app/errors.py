"""
Exception hierarchy shared by the curve, market, model and solver packages.
"""
from typing import Any, Optional


class SchedulerError(Exception):
    """Base class for every error raised by the scheduler."""


class ConfigError(SchedulerError, ValueError):
    """Scenario configuration could not be read or validated."""


class CurveValidationError(SchedulerError, ValueError):
    """A production curve violates one of its shape invariants."""

    def __init__(self, message: str, position: Optional[int] = None, item: str = "sample"):
        # positions are 1-based, like the row numbers of MarketDataError
        super().__init__(message if position is None else f"{item} {position}: {message}")
        self.position = position


class MarketDataError(SchedulerError, ValueError):
    """Market records are malformed, non-contiguous or out of range."""

    def __init__(self, message: str, row: Optional[int] = None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class ProblemError(SchedulerError, ValueError):
    """A scheduling problem cannot be assembled from its inputs."""


class ScheduleError(SchedulerError, ValueError):
    """A solution vector cannot be turned into a schedule."""


class SolverError(SchedulerError, RuntimeError):
    """The solver was misused or hit an unrecoverable numerical state."""


class OracleSizeError(SolverError):
    """The enumeration oracle was asked to enumerate too many leaves."""


class VerificationError(SchedulerError):
    """A schedule failed the independent feasibility audit."""

    def __init__(self, message: str, audit: Any = None):
        super().__init__(message)
        self.audit = audit


class OutputError(SchedulerError):
    """A result file could not be written."""

    def __init__(self, message: str, path: Any = None):
        super().__init__(message if path is None else f"{path}: {message}")
        self.path = path
