"""Exception types shared across the package."""


class CurbpriceError(Exception):
    """Base class for all package errors."""


class DimensionError(CurbpriceError):
    """Array shape or length does not match what the operation requires."""


class DataError(CurbpriceError):
    """Dataset is malformed: missing files, bad rows, invalid values."""


class ConfigError(CurbpriceError):
    """Configuration value is out of range or inconsistent."""


class FitError(CurbpriceError):
    """A model or normalizer cannot be fitted on the given input."""


class TrainingError(CurbpriceError):
    """Training failed in a way that retrying with the same inputs cannot fix."""


class UndefinedMetricError(CurbpriceError):
    """Requested metric has no defined value for this input (e.g. zero variance)."""
