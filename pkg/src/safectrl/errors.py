"""Shared exception types."""


class SafectrlError(Exception):
    """Base class for package-specific errors."""


class InputError(SafectrlError, ValueError):
    """Malformed, non-finite, or dimensionally inconsistent input."""


class InsufficientDataError(SafectrlError, ValueError):
    """Not enough samples to perform the requested fit or statistic."""


class DegenerateDataError(SafectrlError, RuntimeError):
    """Data that defeats the fitting procedure (e.g. collapsed clusters)."""


class InsufficientCalibrationError(SafectrlError, ValueError):
    """Calibration window is empty where scores are required."""


class ParseError(SafectrlError, ValueError):
    """A persisted document could not be parsed at all."""


class SchemaError(SafectrlError, ValueError):
    """A persisted document parsed but violates the expected schema."""


class IntegrityError(SafectrlError, RuntimeError):
    """A recorded digest does not match the file on disk."""
