"""Estimator-style front end for the solver.

``PirpnnSolver`` follows the scikit-learn convention: hyperparameters are
constructor arguments (so ``get_params``/``set_params``/``clone`` work),
``fit`` trains the per-subinterval network weights over the requested horizon,
and ``predict`` evaluates the fitted continuous solution.  Fitted attributes
carry trailing underscores.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .errors import InputError
from .residual import IvpSystem
from .stepper import SolverConfig, solve
from .trial import dense_output


class PirpnnSolver(BaseEstimator):
    """Random-projection collocation solver for stiff ODEs and index-1 DAEs.

    Parameters
    ----------
    n_kernels : int
        Gaussian kernels per state and subinterval.
    n_collocation : int
        Collocation points per subinterval.
    c : float
        Shape-interval scale; the shape upper bound is ``n_kernels**2 / (c dt)**2``.
    abs_tol, rel_tol : float
        Error-control tolerances.
    max_newton : int
        Newton update budget per subinterval attempt.
    gamma_min, gamma_max, safety : float
        Step controller bounds and safety factor.
    random_state : int
        Seed of the per-subinterval shape draws.
    sparse : {"auto", "on", "off"}
        Linear-solver route; "auto" switches on declared sparsity or size.
    sparse_threshold : int
        Unknown count above which "auto" selects the sparse route.
    tikhonov : float
        Optional ridge damping of the sparse least-squares solve.
    audit : bool
        Run the cheap per-step invariant audits.

    Attributes
    ----------
    trajectory_ : Trajectory
        Accepted subintervals with their trained weights.
    stats_ : SolveStats
        Step/iteration/factorization counts and wall time.
    """

    def __init__(self, n_kernels=20, n_collocation=20, c=12.0,
                 abs_tol=1e-6, rel_tol=1e-6, max_newton=5,
                 gamma_min=0.1, gamma_max=4.0, safety=0.8,
                 random_state=0, sparse="auto", sparse_threshold=1000,
                 tikhonov=0.0, audit=True):
        self.n_kernels = n_kernels
        self.n_collocation = n_collocation
        self.c = c
        self.abs_tol = abs_tol
        self.rel_tol = rel_tol
        self.max_newton = max_newton
        self.gamma_min = gamma_min
        self.gamma_max = gamma_max
        self.safety = safety
        self.random_state = random_state
        self.sparse = sparse
        self.sparse_threshold = sparse_threshold
        self.tikhonov = tikhonov
        self.audit = audit

    def _config(self) -> SolverConfig:
        return SolverConfig(
            n_kernels=self.n_kernels, n_collocation=self.n_collocation, c=self.c,
            abs_tol=self.abs_tol, rel_tol=self.rel_tol, max_newton=self.max_newton,
            gamma_min=self.gamma_min, gamma_max=self.gamma_max, safety=self.safety,
            rng_seed=self.random_state, sparse=self.sparse,
            sparse_threshold=self.sparse_threshold, tikhonov=self.tikhonov,
            audit=self.audit,
        )

    def fit(self, system: IvpSystem, t_span, z0):
        """Integrate ``system`` over ``t_span`` from ``z0``; returns self."""
        if not isinstance(system, IvpSystem):
            raise InputError("fit expects an IvpSystem")
        self.trajectory_, self.stats_ = solve(system, t_span, np.asarray(z0, float),
                                              self._config())
        self.system_ = system
        self.t_span_ = (float(t_span[0]), float(t_span[1]))
        return self

    def predict(self, t) -> np.ndarray:
        """Dense evaluation of the fitted solution at time(s) ``t``."""
        check_is_fitted(self, "trajectory_")
        return dense_output(self.trajectory_, t)
