"""Exception types shared across the package."""

from __future__ import annotations


class NftError(Exception):
    """Base class for all library errors."""


class DomainError(NftError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateError(NftError, ValueError):
    """Coincident points, zero-length legs or a sign test sitting on zero."""


class ConstraintError(NftError, ValueError):
    """Input geometry violates a precondition beyond tolerance.

    ``residual`` holds the worst violation that was measured.
    """

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(f"{message} (worst residual {residual:.3e})")
        self.residual = residual


class AttachError(NftError):
    """A tile could not be attached.

    ``reason`` is one of ORIENTATION_MISMATCH, ANGLE_MISMATCH,
    NO_COPLANAR_BRANCH or AMBIGUOUS_BRANCH.
    """

    def __init__(self, reason: str, message: str = ""):
        super().__init__(f"{reason}: {message}" if message else reason)
        self.reason = reason


class ConvergenceError(NftError, RuntimeError):
    """An iterative solver hit its iteration cap."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []
