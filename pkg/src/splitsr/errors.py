"""Exception types raised across the package."""


class SplitSRError(Exception):
    """Base class for all package errors."""


class StructureError(SplitSRError, ValueError):
    """A tree is malformed or does not fit the data it is applied to."""


class InputError(SplitSRError, ValueError):
    """Bad user-supplied data."""


class ConfigError(SplitSRError, ValueError):
    """Invalid search or generation configuration."""


class InfeasibleSplitError(SplitSRError, ValueError):
    """No threshold separates the condition values (they are all equal)."""


class DocumentError(SplitSRError, ValueError):
    """A model document could not be parsed; ``path`` locates the bad node."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path
