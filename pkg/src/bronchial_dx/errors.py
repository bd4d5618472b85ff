"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when user-supplied input fails a range or consistency check.

    Carries an optional ``field`` so callers can point at the offending
    input (API layers map this to a per-field error payload).
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class ConfigError(ValueError):
    """Raised when a definition or config file is internally inconsistent."""
