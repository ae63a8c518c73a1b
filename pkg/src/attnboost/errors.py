"""Exception types shared across the package."""


class AttnBoostError(Exception):
    """Base class for all errors raised by this package."""


class DataError(AttnBoostError):
    """Malformed or inconsistent input data (CSV cells, schemas, labels)."""


class ConfigError(AttnBoostError):
    """Invalid configuration file or configuration value."""


class ModelFormatError(AttnBoostError):
    """Unreadable, corrupted, or unsupported model file."""
