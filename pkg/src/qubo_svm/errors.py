"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid input: shapes, labels, parameter ranges, file contents."""


class ProblemTooLarge(ValidationError):
    """Exhaustive solving refused because the instance is too big."""


class NoSupportVectors(ValueError):
    """The dual weights are all zero, so no classifier can be recovered."""


class ConstraintUnsatisfied(RuntimeError):
    """The penalty loop ran out of doublings without a balanced solution."""

    def __init__(self, message: str, residual: int, lam: float):
        super().__init__(message)
        self.residual = residual
        self.lam = lam
