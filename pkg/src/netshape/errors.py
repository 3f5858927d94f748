"""Exception types shared across the package."""

from __future__ import annotations


class NetshapeError(Exception):
    """Base class for errors raised by this package."""


class DomainError(NetshapeError, ValueError):
    """Input outside the mathematical domain of an operation."""


class ParseError(NetshapeError):
    """Malformed external input.

    Carries the 1-based line number when the source is line oriented.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConvergenceError(NetshapeError):
    """Iterative solver failed to reach its tolerance.

    The last iterate and the iteration count are attached so callers can
    inspect or retry.
    """

    def __init__(self, message: str, iterations: int, last_iterate=None):
        self.iterations = iterations
        self.last_iterate = last_iterate
        super().__init__(message)
