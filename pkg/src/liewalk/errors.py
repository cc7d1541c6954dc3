"""Exception hierarchy shared by all liewalk modules."""


class LieWalkError(Exception):
    """Base class for all errors raised by this package."""


class InvalidDimensionError(LieWalkError):
    """Matrix dimension is unsupported (e.g. d < 2)."""


class InvalidArgumentError(LieWalkError):
    """An argument violates a documented precondition."""


class MembershipError(InvalidArgumentError):
    """A matrix violates a group/algebra membership constraint.

    Carries the name of the violated constraint and the measured residual
    so deserializers and validators can produce actionable diagnostics.
    """

    def __init__(self, constraint: str, residual: float, detail: str = ""):
        self.constraint = constraint
        self.residual = residual
        msg = f"constraint '{constraint}' violated, residual {residual:.3e}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class SingularMatrixError(LieWalkError):
    """Matrix is singular (or numerically indistinguishable from singular)."""


class OutOfDomainError(LieWalkError):
    """Input lies outside the domain where the operation is defined.

    Raised e.g. by the matrix logarithm outside its convergence region and
    by series operators when the contraction condition fails.
    """


class NonConvergenceError(LieWalkError):
    """An iterative scheme failed to converge; message carries diagnostics."""


class UsageError(LieWalkError):
    """Invalid CLI usage or configuration."""
