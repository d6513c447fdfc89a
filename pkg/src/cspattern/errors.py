"""Exception types raised across the package."""


class CSPatternError(Exception):
    """Base class for all package errors."""


class ShapeError(CSPatternError, ValueError):
    """Array or vector dimensions do not agree."""


class DomainError(CSPatternError, ValueError):
    """A scalar argument lies outside its admissible range."""


class BoundsError(CSPatternError, IndexError):
    """Pixel coordinates fall outside the grid."""


class FactorizationError(CSPatternError, ArithmeticError):
    """A matrix that must be symmetric positive definite is not (numerically)."""


class PlanningError(CSPatternError, ValueError):
    """A measurement plan is infeasible or internally inconsistent."""


class FormatError(CSPatternError, ValueError):
    """A file on disk does not follow its declared format."""


class ValidationError(CSPatternError, ValueError):
    """Input data is well-formed but violates a data invariant."""
