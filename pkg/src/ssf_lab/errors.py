"""Exceptions raised by ssf_lab.

Every error derives from :class:`SsfLabError` so callers (the suite runner
and the CLI) can attribute failures without catching unrelated exceptions.
"""

from typing import Optional

__all__ = [
    "SsfLabError",
    "LinearAlgebraError",
    "SingularShiftError",
    "SingularMatrixError",
    "ConvergenceFailureError",
    "PoleNearSpectrumError",
    "NotHermitianError",
    "DimensionError",
    "SpectrumConfinementError",
    "BoundaryError",
    "BranchStepTooLargeError",
    "ExtrapolationDivergedError",
    "GridTooCloseError",
    "QuadratureBudgetExceededError",
    "RepresentationError",
    "PoleHitError",
    "RepresentationMismatchError",
    "GeneralizedIntegralError",
    "EdgeTooCloseError",
    "NonUniformGridError",
    "TailModelRequiredError",
    "NotWeakL1ZeroError",
    "NoConvergenceError",
    "RuleNotAdmissibleError",
    "InconsistentDualityError",
    "ScenarioError",
    "ScenarioParseError",
    "ScenarioValidationError",
    "ArtifactIoError",
]


class SsfLabError(Exception):
    """Base class for all ssf_lab errors."""


# ---------------------------------------------------------------------------
# Linear algebra
# ---------------------------------------------------------------------------


class LinearAlgebraError(SsfLabError):
    """Base class for dense linear algebra failures."""


class SingularShiftError(LinearAlgebraError):
    """Raised when a shift z is too close to the spectrum of a matrix."""


class SingularMatrixError(LinearAlgebraError):
    """Raised when a factorization meets a pivot below threshold."""


class ConvergenceFailureError(LinearAlgebraError):
    """Raised when an eigenvalue solver does not converge."""


class PoleNearSpectrumError(LinearAlgebraError):
    """Raised when a pole of a rational function is too close to a spectrum."""


class NotHermitianError(LinearAlgebraError):
    """Raised when a matrix expected to be Hermitian is not."""


class DimensionError(LinearAlgebraError):
    """Raised when a matrix exceeds the dense dimension cap or shapes disagree."""


class SpectrumConfinementError(LinearAlgebraError):
    """Raised when an eigenvalue of H = H0 - iV lies above the real axis."""


# ---------------------------------------------------------------------------
# Boundary values
# ---------------------------------------------------------------------------


class BoundaryError(SsfLabError):
    """Base class for boundary-value extraction failures."""


class BranchStepTooLargeError(BoundaryError):
    """Raised when branch continuation needs more refinement than allowed."""


class ExtrapolationDivergedError(BoundaryError):
    """Raised when successive extrapolation estimates grow instead of settling."""


class GridTooCloseError(BoundaryError):
    """Raised when a grid point lies inside an exclusion zone of the spectrum."""


class QuadratureBudgetExceededError(SsfLabError):
    """Raised when a quadrature cannot meet its error budget."""


# ---------------------------------------------------------------------------
# Representations
# ---------------------------------------------------------------------------


class RepresentationError(SsfLabError):
    """Base class for representation failures."""


class PoleHitError(RepresentationError):
    """Raised when a Blaschke product is evaluated at one of its poles."""


class RepresentationMismatchError(RepresentationError):
    """Raised when a fitted representation misses the direct value."""


# ---------------------------------------------------------------------------
# Generalized integrals
# ---------------------------------------------------------------------------


class GeneralizedIntegralError(SsfLabError):
    """Base class for Hilbert transform and A-integral failures."""


class EdgeTooCloseError(GeneralizedIntegralError):
    """Raised when a principal value is requested at or beyond the grid edge."""


class NonUniformGridError(GeneralizedIntegralError):
    """Raised when an FFT method receives a non-uniform grid."""


class TailModelRequiredError(GeneralizedIntegralError):
    """Raised when a level set leaves the grid and no tail model is known."""


class NotWeakL1ZeroError(GeneralizedIntegralError):
    """Raised when a function fails the o(1/t) test at either end."""


class NoConvergenceError(GeneralizedIntegralError):
    """Raised when truncated integrals do not settle."""


class RuleNotAdmissibleError(GeneralizedIntegralError):
    """Raised when a sequence rule does not give a divergent series study."""


class InconsistentDualityError(GeneralizedIntegralError):
    """Raised when the two evaluations of a dual integral disagree."""


# ---------------------------------------------------------------------------
# Scenarios and artifacts
# ---------------------------------------------------------------------------


class ScenarioError(SsfLabError):
    """Base class for configuration errors (CLI exit code 2)."""


class ScenarioParseError(ScenarioError):
    """Raised when a scenario file cannot be parsed.

    :param message: description of the problem
    :param field: dotted path of the offending field, if known
    :param line: line number in the file, if known
    """

    def __init__(
        self, message: str, field: Optional[str] = None, line: Optional[int] = None
    ):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")


class ScenarioValidationError(ScenarioError):
    """Raised when a parsed scenario violates an invariant."""


class ArtifactIoError(ScenarioError):
    """Raised when report artifacts cannot be written or read."""
