"""Exception types shared across the package."""


class SzpredError(Exception):
    """Base class for all package errors."""


class ParseError(SzpredError):
    """Malformed input file; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InsufficientDataError(SzpredError):
    """Input shorter than the operation requires."""


class ShapeError(SzpredError):
    """Array dimensions incompatible with the operation."""


class ParameterError(SzpredError):
    """Invalid configuration or argument value."""


class DataError(SzpredError):
    """Non-finite or otherwise unusable numeric data."""


class TrainingError(SzpredError):
    """Training preconditions violated (e.g. single-class table)."""


class ModelFormatError(SzpredError):
    """Corrupt, truncated, or unsupported model file; carries line context."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class JobError(SzpredError):
    """A map or reduce task failed; carries task context."""


class StartupError(SzpredError):
    """Distributed run could not start (no workers registered)."""
