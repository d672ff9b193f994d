"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A construction-time parameter is invalid (bad rate, window, layout)."""


class UsageError(ValueError):
    """An operation was called with inputs violating its contract."""


class FormatError(ValueError):
    """A serialized file (weights, feature records) is malformed."""
