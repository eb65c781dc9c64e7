"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input lies outside the validity range of a physical model."""


class ConfigError(ValueError):
    """Scenario file or override is malformed."""

    def __init__(self, message, key=None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key
