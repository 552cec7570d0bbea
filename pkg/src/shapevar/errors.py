"""Exception hierarchy shared by every shapevar module."""


class ShapeVarError(Exception):
    pass


class InputError(ShapeVarError, ValueError):
    """Argument outside the admissible range (bad k, non-unit vector, p >= d, ...)."""


class DomainError(InputError):
    """Radial coordinate outside the region where a closed form is defined."""


class PreconditionError(ShapeVarError, ValueError):
    """A formula branch was requested for a spectrum that violates its hypotheses."""

    def __init__(self, message, modes=()):
        super().__init__(message)
        self.modes = tuple(modes)


class EvaluationError(ShapeVarError, ArithmeticError):
    """A sampled integrand or curve produced a non-finite value."""


class SolverError(ShapeVarError, RuntimeError):
    """A collocation solve failed to meet its residual tolerance."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual
