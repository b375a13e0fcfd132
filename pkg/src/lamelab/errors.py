"""Exception hierarchy shared across the package."""


class LamelabError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(LamelabError):
    """A configuration field or precondition is invalid."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ParseError(LamelabError):
    """A config file line could not be parsed."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class GridMisaligned(ValidationError):
    """Inner-box faces do not lie on grid planes of the requested resolution."""


class DegenerateBox(ValidationError):
    """Inner box is not strictly interior to the outer box (or is inverted)."""


class UnknownFace(LamelabError):
    """Interface face index out of range."""


class DegenerateTet(LamelabError):
    """Tetrahedron with non-positive volume."""


class DegenerateTriangle(LamelabError):
    """Triangle with (near-)zero area."""


class NonPositiveEnergy(LamelabError):
    """Energy Gram matrix failed its positive-definiteness certificate."""


class SolverBreakdown(LamelabError):
    """A linear solve failed or left an unacceptable residual."""

    def __init__(self, message: str, residual: float | None = None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (residual {residual:.3e})"
        super().__init__(message)


class IdentityViolated(LamelabError):
    """An exact discrete identity was violated beyond tolerance."""


class BetaZero(LamelabError):
    """Operation requires a nonzero frequency beta."""


class ConvergenceFailure(LamelabError):
    """Iterative eigensolver did not converge."""
