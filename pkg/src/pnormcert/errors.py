"""Shared exception types."""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class SingularEvaluationError(ArithmeticError):
    """Log evaluation requested at (or numerically indistinguishable from) a zero."""


class BoundaryProximityError(RuntimeError):
    """A contour passes too close to a zero of the target function.

    Carries ``suggested_inflation``: callers that own the window may retry
    with the rectangle inflated by that factor about its center.
    """

    def __init__(self, message: str, suggested_inflation: float = 1.0 + 2.0**-5):
        super().__init__(message)
        self.suggested_inflation = suggested_inflation


class QuadratureError(RuntimeError):
    """Contour quadrature failed to stabilize on an integer winding number."""


class ContinuationError(RuntimeError):
    """Branch tracking could not advance (step size underflow)."""

    def __init__(self, message: str, point: complex | None = None):
        super().__init__(message)
        self.point = point


class ClearanceError(InvalidInputError):
    """A path runs closer to a zero than its declared clearance."""


class MonodromyMismatchError(RuntimeError):
    """Measured loop multiplier disagrees with the predicted one."""
