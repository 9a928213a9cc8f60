"""Exception types shared across the package."""


class DickelabError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameterError(DickelabError, ValueError):
    """A physical parameter or configuration value violates a precondition."""


class SizeLimitError(InvalidParameterError):
    """Requested system size exceeds what the backend supports."""


class BasisMismatchError(DickelabError, TypeError):
    """Operands live on incompatible bases."""


class NoFixedPointError(DickelabError):
    """No stable mean-field fixed point exists for these parameters."""


class DegenerateInputError(DickelabError):
    """Input sits on a degenerate manifold where the quantity is 0 or divergent."""


class CriticalDivergenceError(DickelabError):
    """Gaussian fluctuations diverge; the steady-state moment system is singular."""


class StiffnessError(DickelabError):
    """Adaptive integration failed (step-size underflow).

    Attributes
    ----------
    t_reached : float
        Integration time at which the failure occurred.
    """

    def __init__(self, message, t_reached=None):
        super().__init__(message)
        self.t_reached = t_reached


class NonConvergenceError(DickelabError):
    """An iterative solve stopped before reaching its target residual.

    Attributes
    ----------
    residual : float or None
        Last residual observed.
    t_reached : float or None
        Simulated time (or iteration count) at which the cap was hit.
    """

    def __init__(self, message, residual=None, t_reached=None):
        super().__init__(message)
        self.residual = residual
        self.t_reached = t_reached


class InternalConsistencyError(DickelabError):
    """A self-check failed (e.g. a real-by-construction quantity came out complex)."""


class AliasingWarning(UserWarning):
    """Trajectory sampling is too coarse for reliable finite differences."""
