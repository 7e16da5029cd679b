"""Exception types shared across the package."""


class NdeError(Exception):
    """Base class for all package-specific errors."""


class IndexOutOfRange(NdeError):
    """Eigenvalue index l outside the conservation-law range l < 2k+1."""


class InvalidScaling(NdeError):
    """Similarity exponents violate alpha*n < 1."""


class SingularPoint(NdeError):
    """Residual requested at a point where the ODE coefficients are singular."""


class StepUnderflow(NdeError):
    """Adaptive step size fell below the floating-point floor."""


class StateOverflow(NdeError):
    """A state component exceeded the magnitude cap."""


class NoBracket(NdeError):
    """Event refinement found no sign change in the dense output."""


class BadDelta(NdeError):
    """Interface offset delta too large relative to |y0|."""


class SingularCrossing(NdeError):
    """Regularized crossing of y=0 produced non-finite values."""


class NoContraction(NdeError):
    """Picard iteration failed to contract (cap too large)."""


class NegativeDiscriminant(NdeError):
    """Zero recurrence produced a negative discriminant."""


class NoRootAbove(NdeError):
    """Matching quadratic had no real root above the current zero."""


class MatchingFailure(NdeError):
    """Piecewise construction violated a continuity condition.

    Carries the measured jump in args[1] when raised by build_piecewise.
    """


class MassDeficit(NdeError):
    """Kernel mass missed the normalization tolerance on the requested domain."""


class InvalidExponents(NdeError):
    """Absorption exponent p incompatible with n (needs p > n+1, away from p_crit)."""


class NoConvergence(NdeError):
    """Newton relaxation failed to converge.

    Attributes
    ----------
    best_state : ndarray or None
        The iterate with the smallest residual norm seen.
    residual_norm : float
        Residual norm of that iterate.
    """

    def __init__(self, message, best_state=None, residual_norm=None):
        super().__init__(message)
        self.best_state = best_state
        self.residual_norm = residual_norm


class InsufficientExtrema(NdeError):
    """Too few usable extrema for an oscillation-bound check."""


class TooFewPoints(NdeError):
    """Too few extrema inside the fitting window."""
