"""Exception types shared across the package."""


class BiobstacleError(Exception):
    """Base class for every error raised by this package."""


class InvalidSpec(BiobstacleError):
    """Grid, operator, or control parameters violate a validity contract."""


class GridMismatch(BiobstacleError):
    """Two objects built on different grids were combined."""


class InfeasibleObstacles(BiobstacleError):
    """Obstacle pair has no positive separation (or too little for the solver)."""


class UnsupportedControlKind(BiobstacleError):
    """Operation requires a control kind it does not support."""


class ComplementarityViolated(BiobstacleError):
    """A claimed solution fails the complementarity conditions."""


class NotMonotonePair(BiobstacleError):
    """Inputs were promised nodewise ordered but are not."""


class InvalidD(BiobstacleError):
    """Reduced-equation domain does not sit between the inactive set and the
    complement of the strictly active set."""


class InvalidBeta(BiobstacleError):
    """Oscillation exponent outside the open interval (0, 1/2)."""


class EvaluationDomain(BiobstacleError):
    """Radial test function sampled outside its domain."""


class NoClosedFormGradient(BiobstacleError):
    """Requested radial profile has no closed-form gradient integral."""


class ConfigError(BiobstacleError):
    """Malformed or inconsistent experiment configuration."""


class AssertionFailure(BiobstacleError):
    """A verification suite failed; carries the report of what failed."""


class NoConvergence(BiobstacleError):
    """Iterative solver hit its iteration cap before reaching tolerance."""

    def __init__(self, method: str, iterations: int, residual: float):
        self.method = method
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"{method} did not converge: residual {residual:.3e} "
            f"after {iterations} iterations"
        )
