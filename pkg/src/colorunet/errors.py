class ColorUNetError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(ColorUNetError, ValueError):
    """Invalid configuration or arguments."""


class DataError(ColorUNetError, ValueError):
    """Unreadable, malformed or insufficient input data."""


class FormatError(DataError):
    """A binary file failed magic, version, length or checksum checks."""


class FittingError(DataError):
    """The corpus cannot support the requested codebook."""


class NumericalError(ColorUNetError, FloatingPointError):
    """A non-finite value reached a loss or gradient."""
