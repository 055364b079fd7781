"""Exception taxonomy.

Two families matter for exit-code mapping in the CLI: ``ValidationError``
(bad inputs, exit 1) and ``NumericalError`` (a computation failed, exit 2).
"""


class RiskNetError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(RiskNetError):
    """Invalid input data or configuration."""


class DimensionMismatch(ValidationError):
    """Array or vector dimensions are inconsistent."""


class ProbabilityOutOfRange(ValidationError):
    """A probability entry lies outside [0, 1]."""


class SelfLoop(ValidationError):
    """The adjacency matrix has a nonzero diagonal entry."""


class ParseError(ValidationError):
    """A file could not be parsed; message names the offending field."""


class UnknownSchemaVersion(ValidationError):
    """A file declares a schema version this toolkit does not read."""


class StratumInfeasible(ValidationError):
    """A sampling stratum cannot be filled; message names the stratum."""


class NumericalError(RiskNetError):
    """A numerical procedure failed."""


class NoConvergence(NumericalError):
    """Iteration hit its cap before the residual fell below tolerance."""

    def __init__(self, max_iter: int, residual: float):
        self.max_iter = max_iter
        self.residual = residual
        super().__init__(
            f"no convergence after {max_iter} iterations, last residual {residual:.3e}"
        )


class SaturatedPoint(NumericalError):
    """The analytic Jacobian is undefined where the update map saturates."""


class SingularInnerMatrix(NumericalError):
    """The gain equation's inner matrix is numerically singular."""


class TargetsUnreachable(NumericalError):
    """Synthetic generation could not hit the degree targets within retries."""
