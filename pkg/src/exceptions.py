from typing import Optional


class OculofiltError(ValueError):
    """Base class for input and processing errors raised by oculofilt."""


class RecordingFormatError(OculofiltError):
    """A recording stream violates the CSV contract."""

    def __init__(self, message: str, row: Optional[int] = None, path: Optional[str] = None):
        self.message = message
        self.row = row
        self.path = path
        where = []
        if path:
            where.append(str(path))
        if row is not None:
            where.append(f"row {row}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")


class SignalError(OculofiltError):
    """An array does not meet an operation's preconditions."""


class FilterDesignError(OculofiltError):
    """Invalid filter parameters or a numerically unstable design."""


class GridMismatchError(OculofiltError):
    """Spectra do not share a frequency grid or segment count."""


class ConfigError(OculofiltError):
    """Invalid run configuration."""
