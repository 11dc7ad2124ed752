"""Exception types shared across the package."""


class DeplError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(DeplError):
    """Invalid configuration: bad filter cutoffs, unknown config keys,
    incompatible network layer shapes, broken electrode layouts."""


class ArgumentError(DeplError, ValueError):
    """A caller-supplied value violates an operation's preconditions."""


class DegenerateInputError(DeplError, ValueError):
    """Input is degenerate for the requested statistic (e.g. zero variance)."""


class FormatError(DeplError):
    """A data file is malformed. ``offset`` carries the byte position at
    which parsing failed, when known."""

    def __init__(self, message: str, *, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class StateError(DeplError, RuntimeError):
    """Operation invoked in an invalid state (e.g. backward before forward)."""


class TrainingError(DeplError, RuntimeError):
    """Training diverged; the message names the epoch and batch."""
