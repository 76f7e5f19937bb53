"""Exception hierarchy for releq."""


class ReleqError(Exception):
    """Base class for all library errors."""


class InvalidSystemError(ReleqError, ValueError):
    """A body system violates its invariants (masses, dimensions, centering)."""


class CollisionError(ReleqError):
    """Two bodies are closer than the collision tolerance."""


class NotOnEllipsoidError(ReleqError):
    pass


class NotTangentError(ReleqError):
    pass


class NoConvergenceError(ReleqError):
    """The central-configuration solver hit its iteration cap."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class CollisionDuringIterationError(CollisionError):
    pass


class DegenerateBasisError(ReleqError):
    pass


class SingularEndpointError(ReleqError):
    """A spectral flow was requested on a path with a non-invertible endpoint."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class NotACrossingError(ReleqError):
    pass


class DegenerateCrossingError(ReleqError):
    """A crossing form is degenerate; use partial signatures instead."""

    def __init__(self, message, t_star=None):
        super().__init__(message)
        self.t_star = t_star


class NonIsolatedCrossingError(ReleqError):
    pass


class NotAnEigenvalueError(ReleqError):
    pass


class NotSymplecticError(ReleqError):
    pass


class WrongPotentialError(ReleqError):
    pass


class UnsupportedPathError(ReleqError):
    """The path is outside the class handled by the partial-signature routine."""
