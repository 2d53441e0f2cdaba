"""Exception hierarchy for berwald-scalar."""


class FinslerError(Exception):
    """Base class for every error raised by the curvature engine."""


class DomainError(FinslerError):
    """A metric or jet operation was evaluated outside its domain."""


class OrderError(FinslerError):
    """A derivative was requested beyond the order carried by a jet."""


class NotStronglyConvex(FinslerError):
    """The fundamental tensor is not positive definite."""


class HomogeneityError(FinslerError):
    """The Euler identity g(y, y) = F^2 failed."""


class QuadratureError(FinslerError):
    """A fiber quadrature met a nonpositive or non-finite integrand."""


class ResolutionError(FinslerError):
    """A spectral representation is under-resolved."""


class RankError(FinslerError):
    """A least-squares system is rank deficient."""


class ConstructionError(FinslerError):
    """A metric constructor failed its construction checks."""


class InconsistencyError(FinslerError):
    """Classification labels contradict a proven implication."""


class ParseError(FinslerError):
    """A configuration or point file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
