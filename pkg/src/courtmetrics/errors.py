"""Exception hierarchy.

Every error carries a machine-readable ``category`` and the process exit code
the CLI uses when the error escapes a subcommand.
"""

from __future__ import annotations


class CourtMetricsError(Exception):
    category = "internal"
    exit_code = 1


class ConfigError(CourtMetricsError, ValueError):
    category = "config"
    exit_code = 2


class StreamFormatError(CourtMetricsError, ValueError):
    """Malformed stream line; ``line`` is 1-based."""

    category = "stream-format"
    exit_code = 3

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OrderingError(StreamFormatError):
    category = "stream-ordering"
    exit_code = 4


class SchemaError(StreamFormatError):
    category = "stream-schema"
    exit_code = 5


class CalibrationUnavailableError(CourtMetricsError):
    category = "calibration-unavailable"
    exit_code = 6


class InsufficientCorrespondencesError(CalibrationUnavailableError):
    category = "insufficient-correspondences"
    exit_code = 7


class DegenerateHomographyError(CourtMetricsError, ValueError):
    category = "degenerate-homography"
    exit_code = 8


class PointAtInfinityError(CourtMetricsError, ArithmeticError):
    category = "point-at-infinity"
    exit_code = 9


class DomainError(CourtMetricsError, ValueError):
    category = "domain"
    exit_code = 10


class EmptyTrackError(CourtMetricsError):
    category = "empty-track"
    exit_code = 11


class ParameterError(CourtMetricsError, ValueError):
    category = "parameter"
    exit_code = 12


class IntervalError(CourtMetricsError, ValueError):
    category = "interval"
    exit_code = 13


class ScriptError(CourtMetricsError, ValueError):
    category = "script"
    exit_code = 14


class ValidationFailedError(CourtMetricsError):
    """A stream parsed but failed validation (report on stdout)."""

    category = "validation-failed"
    exit_code = 15
