"""Exceptions raised by kpca.rff."""

from __future__ import annotations

__all__ = (
    "ConfigError",
    "FormatError",
    "InvalidArgumentError",
    "KpcaError",
    "ResourceLimitError",
    "SpectralGapError",
)


class KpcaError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(KpcaError, ValueError):
    """An argument has the wrong shape, dimension, or range."""


class ResourceLimitError(KpcaError, MemoryError):
    """An operation would exceed a configured size cap.

    Example::

        >>> str(ResourceLimitError("kernel matrix", cap=4000, requested=5000))
        'kernel matrix needs 5000 points but the cap is 4000'
    """

    def __init__(self, what: str, *, cap: int, requested: int) -> None:
        """Initialize the error for a resource `what` requested above `cap`."""
        super().__init__(f"{what} needs {requested} points but the cap is {cap}")
        self.cap = cap
        self.requested = requested


class FormatError(KpcaError, ValueError):
    """Malformed input file.

    Exactly one of `offset` (idx files) or `line` (delimited text) is set.
    """

    def __init__(self, msg: str, *, offset: int | None = None, line: int | None = None) -> None:
        """Initialize the error with the location of the problem."""
        if offset is not None:
            msg = f"{msg} (at byte offset {offset})"
        if line is not None:
            msg = f"{msg} (at line {line})"
        super().__init__(msg)
        self.offset = offset
        self.line = line


class ConfigError(KpcaError, ValueError):
    """An experiment configuration is invalid.

    Example::

        >>> str(ConfigError("must be strictly increasing", key="checkpoints"))
        'checkpoints: must be strictly increasing'
    """

    def __init__(self, msg: str, *, key: str | None = None) -> None:
        """Initialize the error, optionally naming the offending key."""
        super().__init__(msg if key is None else f"{key}: {msg}")
        self.key = key


class SpectralGapError(KpcaError, ArithmeticError):
    """An eigengap required by the computation is numerically zero."""
