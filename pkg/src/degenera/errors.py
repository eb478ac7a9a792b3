"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """An argument violates an operation's precondition."""


class SingularEvaluationError(ArithmeticError):
    """A field produced a non-finite value at an evaluation point."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class HypothesisError(RuntimeError):
    """A hypothesis required by an operation does not hold.

    The failing :class:`~degenera.weights.HypothesisReport` (if any) is kept
    in ``report``.
    """

    def __init__(self, message, report=None, condition=None):
        super().__init__(message)
        self.report = report
        self.condition = condition


class NonConvergenceError(RuntimeError):
    """An iterative method stopped without reaching its tolerance."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual
