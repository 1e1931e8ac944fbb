"""Consistent initialization of index-1 DAEs.

Solves the algebraic rows for the algebraic variables at the initial time via
damped Newton-Raphson (step halving), leaving the differential components of
the state untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InitializationError, InputError
from .residual import IvpSystem

_EPS = np.finfo(float).eps


@dataclass
class ConsistencyProblem:
    """Initialization data: full state template with guesses in the algebraic slots.

    ``algebraic_vars`` defaults to the system's algebraic variable set.  The
    nominal tolerance follows the solver convention of essentially-machine
    accuracy; the effective convergence test is floored at ``4 eps`` relative.
    """

    system: IvpSystem
    t0: float
    state: np.ndarray
    algebraic_vars: np.ndarray | None = None
    tolerance: float = 1e-16
    max_iterations: int = 100

    def __post_init__(self):
        self.state = np.asarray(self.state, dtype=float).copy()
        if self.state.size != self.system.m:
            raise InputError("state template has wrong length")
        if self.algebraic_vars is None:
            self.algebraic_vars = self.system.algebraic_vars
        self.algebraic_vars = np.asarray(self.algebraic_vars, dtype=int)
        if self.algebraic_vars.size != self.system.algebraic_rows.size:
            raise InputError("algebraic variable count must match constraint row count")


def constraint_residual(sys: IvpSystem, t: float, u: np.ndarray) -> np.ndarray:
    """Values of the algebraic rows of ``f`` at ``(t, u)``; zero at consistency."""
    fv = np.asarray(sys.f(t, np.asarray(u, dtype=float)), dtype=float)
    return fv[sys.algebraic_rows]


def make_consistent(cp: ConsistencyProblem) -> np.ndarray:
    """Newton-solve the constraints for the algebraic variables; returns their values.

    Raises ``InitializationError`` on a singular constraint Jacobian or when
    the residual does not meet ``tol * (1 + ||v||_inf)`` within the iteration
    budget (with ``tol`` floored at ``4 eps``).
    """
    sys_, t0 = cp.system, cp.t0
    rows, vars_ = sys_.algebraic_rows, cp.algebraic_vars
    if rows.size == 0:
        return np.empty(0)
    u = cp.state.copy()
    tol = max(cp.tolerance, 4.0 * _EPS)

    def g(vals):
        u[vars_] = vals
        return constraint_residual(sys_, t0, u)

    v = u[vars_].copy()
    r = g(v)
    if not np.all(np.isfinite(r)):
        raise InitializationError("constraint residual is non-finite at the initial guess")
    best = np.linalg.norm(r, np.inf)
    for _ in range(cp.max_iterations):
        rnorm = np.linalg.norm(r, np.inf)
        if rnorm <= tol * (1.0 + np.linalg.norm(v, np.inf)):
            return v
        u[vars_] = v
        jg = sys_.jacobian(t0, u)[np.ix_(rows, vars_)]
        if not np.all(np.isfinite(jg)) or np.linalg.cond(jg) > 1.0 / _EPS:
            raise InitializationError(
                "singular constraint Jacobian during consistent initialization",
                best_residual=best,
            )
        dv = np.linalg.solve(jg, -r)
        lam = 1.0
        for _ in range(30):
            r_new = g(v + lam * dv)
            if np.all(np.isfinite(r_new)) and np.linalg.norm(r_new, np.inf) < rnorm:
                break
            lam *= 0.5
        else:
            # No descent found: take the full step and let the outer test decide.
            lam, r_new = 1.0, g(v + dv)
        v = v + lam * dv
        r = r_new
        best = min(best, np.linalg.norm(r, np.inf))
    if np.linalg.norm(r, np.inf) <= tol * (1.0 + np.linalg.norm(v, np.inf)):
        return v
    raise InitializationError(
        f"consistent initialization did not converge in {cp.max_iterations} iterations",
        best_residual=best,
    )


def consistent_state(sys: IvpSystem, t0: float, z0: np.ndarray,
                     tolerance: float = 1e-16) -> np.ndarray:
    """Convenience wrapper: return the full state with algebraic slots made consistent."""
    z0 = np.asarray(z0, dtype=float)
    if sys.algebraic_rows.size == 0:
        return z0.copy()
    cp = ConsistencyProblem(system=sys, t0=t0, state=z0, tolerance=tolerance)
    out = z0.copy()
    out[cp.algebraic_vars] = make_consistent(cp)
    return out
