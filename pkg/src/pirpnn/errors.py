"""Exception hierarchy shared across the solver and harness."""


class PirpnnError(Exception):
    """Base class for all package errors."""


class InputError(PirpnnError, ValueError):
    """Caller violated an input contract (bad shapes, non-finite data, bad names)."""


class SolverFailure(PirpnnError, RuntimeError):
    """The integration could not be completed."""

    def __init__(self, message, t_reached=None, trajectory=None):
        super().__init__(message)
        self.t_reached = t_reached
        self.trajectory = trajectory


class StallError(SolverFailure):
    """Step size collapsed below the minimum admissible width."""


class DivergenceError(SolverFailure):
    """States or residuals became non-finite and could not be recovered."""


class InitializationError(PirpnnError, RuntimeError):
    """Consistent-initialization Newton failed (singular constraint Jacobian or no convergence)."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual
