"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ConstructionError(ValueError):
    """An object could not be built from the supplied inputs."""


class SizingError(ValueError):
    """A requested size exceeds a configured ceiling."""


class NormViolation(DomainError):
    """A record violates the unit-ball / unit-interval bounds."""

    def __init__(self, message: str):
        super().__init__(
            f"{message}; normalize the record first (see privacy.clip_record)"
        )


class InvariantViolation(RuntimeError):
    """An internal invariant was observed to fail at runtime."""


class SolverAbort(RuntimeError):
    """The solver hit a non-finite gradient. ``trace`` holds the partial run."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace
