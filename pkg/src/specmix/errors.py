"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Raised when tensor shapes or index ranges disagree with an op's contract."""


class ConfigError(ValueError):
    """Raised on invalid or unknown configuration content."""


class CheckpointError(ValueError):
    """Raised on malformed, corrupt, or incompatible checkpoint files."""


class TrainingError(RuntimeError):
    """Raised when training hits a non-recoverable numeric state."""
