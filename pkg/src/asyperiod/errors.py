"""Exception hierarchy shared by all modules."""
from __future__ import annotations

__all__ = [
    "AsyPeriodError",
    "InvalidInputError",
    "DomainError",
    "UnsupportedRegimeError",
    "BuildError",
    "ConvergenceError",
    "EigenSolverError",
    "CycleNotClosedError",
    "EmptySupportError",
    "AmbiguousPermutationError",
    "DivergenceError",
    "NoSaddleError",
    "PreimageChainError",
    "DegenerateGeometryError",
    "BracketingError",
]


class AsyPeriodError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(AsyPeriodError, ValueError):
    """Raised for malformed or non-finite arguments."""


class DomainError(InvalidInputError):
    """Raised when an argument lies outside the domain of a map."""


class UnsupportedRegimeError(AsyPeriodError):
    """Raised when a closed form is requested outside its parameter regime."""


class BuildError(AsyPeriodError):
    """Raised when an operator cannot be assembled.

    Parameters
    ----------
    msg : str
        Human readable message.
    cell : int, optional
        Flat index of the offending grid cell.
    """

    def __init__(self, msg: str, cell: int | None = None):
        super().__init__(msg)
        self.cell = cell


class ConvergenceError(AsyPeriodError):
    """Raised when an iteration stops before meeting its tolerance.

    The last residual and iteration count are kept so callers can decide
    whether a partial answer is still useful.
    """

    def __init__(self, msg: str, residual: float, iterations: int):
        super().__init__(msg)
        self.residual = residual
        self.iterations = iterations


class EigenSolverError(AsyPeriodError):
    """Raised when the eigenvalue solver fails."""


class CycleNotClosedError(AsyPeriodError):
    """Raised when averaged cycle densities are not mapped onto each other."""

    def __init__(self, msg: str, defects: list[float]):
        super().__init__(msg)
        self.defects = defects


class EmptySupportError(AsyPeriodError):
    """Raised when no component survives the size filters."""


class AmbiguousPermutationError(AsyPeriodError):
    """Raised when components are not mapped bijectively by a clear majority."""

    def __init__(self, msg: str, votes=None):
        super().__init__(msg)
        self.votes = votes


class DivergenceError(AsyPeriodError):
    """Raised when (almost) all points of a cloud escape."""

    def __init__(self, msg: str, escaped_fraction: float):
        super().__init__(msg)
        self.escaped_fraction = escaped_fraction


class NoSaddleError(AsyPeriodError):
    """Raised when the left saddle point does not exist (alpha + beta <= 1)."""


class PreimageChainError(AsyPeriodError):
    """Raised when the preimage chain never reaches the upper half plane."""


class DegenerateGeometryError(AsyPeriodError):
    """Raised when a chord is parallel to the x axis."""


class BracketingError(AsyPeriodError):
    """Raised when the threshold scan finds no sign change.

    Attributes
    ----------
    profile : list of tuple
        The scanned ``(alpha, value)`` pairs.
    """

    def __init__(self, msg: str, profile: list):
        super().__init__(msg)
        self.profile = profile
