"""Exception types shared across the package."""


class UavflowError(Exception):
    """Base class for all package errors."""


class DegenerateGeometry(UavflowError):
    """Two entities coincide; distance-based quantities are undefined."""


class DegenerateDenominator(UavflowError):
    """A SIR denominator is zero (no interferers and no safety term)."""


class ZeroDegree(UavflowError):
    """A node is isolated; the normalized Laplacian is undefined."""


class TooLarge(UavflowError):
    """Exhaustive enumeration requested for a graph beyond its size cap."""


class ConvergenceFailure(UavflowError):
    """An iterative solver failed to meet its residual tolerance."""


class Infeasible(UavflowError):
    """No point satisfies the power-allocation constraints.

    ``family`` names the violated constraint family when known.
    """

    def __init__(self, message, family=None):
        super().__init__(message)
        self.family = family


class InfeasibleExpansion(Infeasible):
    """The SCA expansion point violates a constraint it must satisfy."""


class MaxIterations(UavflowError):
    """Iteration cap reached before the stopping rule was met."""


class SchemaError(UavflowError):
    """Scenario config is malformed.  ``field`` names the offending entry."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class RangeError(SchemaError):
    """Scenario config value is outside its physical range."""
