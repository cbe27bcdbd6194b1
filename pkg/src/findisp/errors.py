"""Exception hierarchy.

Invalid arguments raise plain :class:`ValueError`; the classes below cover
failures that callers (the CLI in particular) need to tell apart.
"""

from __future__ import annotations


class FindispError(Exception):
    """Base class for all library errors."""


class DomainError(FindispError, ValueError):
    """Input lies outside the region where a model is defined."""


class ConvergenceError(FindispError, RuntimeError):
    """An iterative solver failed to converge.

    ``interval`` holds the last bracket or search range when one exists.
    """

    def __init__(self, message: str, interval: tuple[float, float] | None = None):
        super().__init__(message)
        self.interval = interval


class DivergenceError(FindispError, RuntimeError):
    """Time integration blew up (NaN state or step-size underflow)."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t = {time:.6g})")
        self.time = time


class AssemblyError(FindispError, RuntimeError):
    """Finite-element system could not be assembled."""


class ExtractionError(FindispError, ValueError):
    """Wavelength or frequency could not be read off a simulation record."""
