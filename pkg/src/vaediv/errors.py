"""Exception hierarchy shared across the library and the CLI exit-code map."""


class VaedivError(Exception):
    """Base class for all library errors."""


class ConfigError(VaedivError):
    """Invalid configuration or usage (CLI exit code 1)."""


class DataError(VaedivError):
    """Malformed or out-of-range input data (CLI exit code 2)."""


class NumericError(VaedivError):
    """Numeric failure such as a non-finite loss or NaN gradient (CLI exit code 3)."""
