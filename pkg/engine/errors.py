"""
Exception hierarchy shared by the engine, the front-end and the bench harness.
"""

from typing import Any, Dict, Optional


class LazyMXError(Exception):
    """Base class for every error raised by this package."""


class UsageError(LazyMXError):
    """Bad arguments or an operation called outside its precondition."""


class ParseError(LazyMXError):
    """
    Syntax or symbol error in a problem, structure or script file.

    Args:
        message: Human readable description
        line: 1-based line number, 0 when unknown
        col: 1-based column number, 0 when unknown
    """

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(self.__str__())

    def __str__(self) -> str:
        if self.line:
            return f"{self.line}:{self.col}: {self.message}"
        return self.message


class UnsupportedConstruct(ParseError):
    """Function symbols, aggregates or arithmetic in the input."""


class ResourceExhausted(LazyMXError):
    """
    A ground-atom or wall-clock budget was exceeded.

    Args:
        reason: Which budget ran out
        stats: Partial statistics at the moment of failure
    """

    def __init__(self, reason: str, stats: Optional[Dict[str, Any]] = None):
        self.reason = reason
        self.stats = dict(stats or {})
        super().__init__(reason)


class InvariantViolation(LazyMXError):
    """A debug-mode check on the engine state failed."""
