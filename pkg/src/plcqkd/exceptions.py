"""Exception types raised by plcqkd."""


class InvalidArgumentError(ValueError):
    """A parameter lies outside its physical domain."""


class UnsupportedInputError(ValueError):
    """A state does not satisfy the preconditions of a device transfer."""


class UndefinedVisibilityError(ValueError):
    """Visibility requested for a series with no counts."""


class ConfigError(ValueError):
    """Invalid run configuration; ``path`` names the offending key."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")
