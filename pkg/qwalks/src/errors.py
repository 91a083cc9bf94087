"""
Exception hierarchy for qwalks.

Every error carries the process exit code the CLI reports for it.
"""
from __future__ import annotations

from typing import Any, Optional


class QWalksError(Exception):
    """Base class for all qwalks errors"""

    exit_code: int = 1


class DomainError(QWalksError, ValueError):
    """Invalid parameters, configurations or evaluation points"""

    exit_code = 3


class PoleError(DomainError):
    """An evaluation landed within tolerance of a pole"""

    def __init__(self, message: str, location: Any = None):
        super().__init__(message)
        self.location = location


class ContourError(DomainError):
    """No admissible integration contour for the requested kernel entry"""


class EncodingError(DomainError):
    """The boundary encoding does not fit into the requested N"""


class ConfigError(DomainError):
    """Inconsistent run configuration"""


class NumericalError(QWalksError, ArithmeticError):
    """A numerical procedure failed"""

    exit_code = 4


class NonConvergenceError(NumericalError):
    """
    An iterative refinement hit its cap; keeps the last two iterates
    so the caller can judge how far off it was.
    """

    def __init__(
        self,
        message: str,
        previous: Optional[complex] = None,
        current: Optional[complex] = None,
    ):
        super().__init__(message)
        self.previous = previous
        self.current = current


class SingularMatrixError(NumericalError):
    """Determinant requested of a numerically singular matrix"""

    def __init__(self, message: str, condition: float = float("inf")):
        super().__init__(message)
        self.condition = condition


class TruncationError(NumericalError):
    """An infinite product needs more factors than allowed"""


class StepCapError(NumericalError):
    """A trajectory did not reach the absorbing state within the step cap"""


class RootFindingError(NumericalError):
    """Polynomial roots could not be computed"""


class ConsistencyError(NumericalError):
    """A computed quantity failed its defining identity"""


class ValidationFailure(QWalksError):
    """A validation suite reported failures"""

    exit_code = 2
