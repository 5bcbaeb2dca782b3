# ==============================================================================
# errors.py — Grid game exceptions
# ==============================================================================
# Purpose: Exception hierarchy shared by the numerical core, services and CLI
# Sections: Public exports, Exceptions
# ==============================================================================

from typing import List, Optional

# ==============================================================================
# Public exports
# ==============================================================================
__all__ = [
    "GridGameError",
    "NetworkValidationError",
    "SingularMatrixError",
    "DomainError",
    "StructuralError",
    "ScenarioError",
]

# ==============================================================================
# Exceptions
# ==============================================================================

class GridGameError(Exception):
    """Base class for every error raised by the grid game engine."""


class NetworkValidationError(GridGameError, ValueError):
    """Network description is inconsistent (no slack, duplicate ids, asymmetric data...)."""


class SingularMatrixError(GridGameError):
    """A matrix the model requires to be invertible is (numerically) singular."""

    def __init__(self, message: str, matrix: str = "", condition: Optional[float] = None):
        super().__init__(message)
        self.matrix = matrix
        self.condition = condition


class DomainError(GridGameError, ValueError):
    """Input outside an operation's domain (cap violation, dimension mismatch)."""


class StructuralError(GridGameError):
    """The assembled leader system breaks a structural property (zero Gauss-Seidel pivot)."""


class ScenarioError(GridGameError, ValueError):
    """Scenario file could not be parsed or failed schema validation."""

    def __init__(self, message: str, issues: Optional[List[str]] = None):
        super().__init__(message)
        self.issues = list(issues or [])

    def __str__(self) -> str:
        base = super().__str__()
        if not self.issues:
            return base
        return base + "\n" + "\n".join(f"  - {issue}" for issue in self.issues)
