"""Collocation residual and its weight Jacobian for one subinterval.

Residual entries follow ``q = l + (i - 1) n`` (state-major): row block ``i``
holds the residual of equation ``i`` at all collocation points.  Jacobian
columns follow the same convention for weights, ``col = j + (k - 1) N``.
Non-finite right-hand sides are propagated (not raised) so the stepper can
treat them as a divergence signal and shrink the step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import InputError
from .trial import TrialSolution, eval_with_dt, weight_tangents

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class MassMatrix:
    """Constant mass matrix in one of three storage kinds.

    ``identity`` needs no data; ``diagonal`` stores the diagonal; ``dense``
    stores the full matrix.  Zero rows mark algebraic equations.
    """

    kind: str                      # "identity" | "diagonal" | "dense"
    data: np.ndarray | None = None

    @staticmethod
    def identity() -> "MassMatrix":
        return MassMatrix("identity")

    @staticmethod
    def diagonal(d) -> "MassMatrix":
        return MassMatrix("diagonal", np.asarray(d, dtype=float))

    @staticmethod
    def dense(a) -> "MassMatrix":
        return MassMatrix("dense", np.asarray(a, dtype=float))

    def as_dense(self, m: int) -> np.ndarray:
        if self.kind == "identity":
            return np.eye(m)
        if self.kind == "diagonal":
            return np.diag(self.data)
        return self.data

    def zero_rows(self, m: int) -> np.ndarray:
        """Indices of identically-zero rows (the algebraic equations)."""
        if self.kind == "identity":
            return np.empty(0, dtype=int)
        if self.kind == "diagonal":
            return np.nonzero(self.data == 0.0)[0]
        return np.nonzero(~self.data.any(axis=1))[0]

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Apply to rows of ``v`` with states on the last axis."""
        if self.kind == "identity":
            return v
        if self.kind == "diagonal":
            return v * self.data
        return v @ self.data.T


@dataclass
class IvpSystem:
    """A linear-implicit system ``M u' = f(t, u)``.

    ``jac_f`` returns the dense (m, m) state Jacobian of ``f``; when omitted a
    forward-difference fallback is used.  ``sparsity`` optionally declares the
    nonzero pattern of ``jac_f`` as a boolean (m, m) array and routes large
    systems through sparse assembly.  ``algebraic_vars`` names the unknowns
    paired with the algebraic rows (defaults to the rows themselves).
    """

    m: int
    f: Callable[[float, np.ndarray], np.ndarray]
    jac_f: Callable[[float, np.ndarray], np.ndarray] | None = None
    mass: MassMatrix = field(default_factory=MassMatrix.identity)
    sparsity: np.ndarray | None = None
    algebraic_vars: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        if self.m < 1:
            raise InputError("state count must be >= 1")
        if self.mass.kind == "diagonal" and self.mass.data.shape != (self.m,):
            raise InputError("diagonal mass has wrong length")
        if self.mass.kind == "dense" and self.mass.data.shape != (self.m, self.m):
            raise InputError("dense mass has wrong shape")
        self.algebraic_rows = self.mass.zero_rows(self.m)
        if self.algebraic_vars is None:
            self.algebraic_vars = self.algebraic_rows.copy()
        else:
            self.algebraic_vars = np.asarray(self.algebraic_vars, dtype=int)
            if self.algebraic_vars.size != self.algebraic_rows.size:
                raise InputError("algebraic variable set must match algebraic row count")
        if self.sparsity is not None:
            pat = np.asarray(self.sparsity, dtype=bool)
            if pat.shape != (self.m, self.m):
                raise InputError("sparsity pattern has wrong shape")
            self.sparsity = pat

    @property
    def is_dae(self) -> bool:
        return self.algebraic_rows.size > 0

    def differential_rows(self) -> np.ndarray:
        mask = np.ones(self.m, dtype=bool)
        mask[self.algebraic_rows] = False
        return np.nonzero(mask)[0]

    def jacobian(self, t: float, u: np.ndarray) -> np.ndarray:
        if self.jac_f is not None:
            return np.asarray(self.jac_f(t, u), dtype=float)
        return fd_jacobian_f(self, t, u)


@dataclass(frozen=True)
class CollocationGrid:
    """Strictly increasing collocation points in ``(t_start, t_end]``."""

    t_start: float
    t_end: float
    points: np.ndarray

    @property
    def n(self) -> int:
        return self.points.size


def make_grid(t_start: float, t_end: float, n: int) -> CollocationGrid:
    """Equispaced grid ``t_start + l dt / n`` for ``l = 1..n``; excludes the start.

    The initial condition is exact at ``t_start``, so a residual row there
    carries no information for differential equations; algebraic rows are
    enforced at the knot by consistent initialization instead.
    """
    if n < 2:
        raise InputError("need at least 2 collocation points")
    dt = t_end - t_start
    if not dt > 0:
        raise InputError("t_end must exceed t_start")
    pts = t_start + dt * (np.arange(1, n + 1) / n)
    pts[-1] = t_end
    return CollocationGrid(t_start, t_end, pts)


def _f_on_grid(sys: IvpSystem, grid: CollocationGrid, psi: np.ndarray) -> np.ndarray:
    out = np.empty((grid.n, sys.m))
    # Non-finite values signal divergence to the stepper; numpy warnings from
    # transient Newton iterates are noise here.
    with np.errstate(all="ignore"):
        for l, t in enumerate(grid.points):
            out[l] = sys.f(t, psi[l])
    return out


def assemble_residual(sys: IvpSystem, ts: TrialSolution, grid: CollocationGrid) -> np.ndarray:
    """Residual vector of length ``n m``; may contain non-finites (divergence signal)."""
    psi, dpsi = eval_with_dt(ts, grid.points)
    fv = _f_on_grid(sys, grid, psi)
    fmat = sys.mass.apply(dpsi) - fv          # (n, m)
    return fmat.T.ravel()                     # q = l + (i-1) n


def residual_and_derivative(sys: IvpSystem, ts: TrialSolution, grid: CollocationGrid):
    """Residual together with the grid values of ``dpsi/dt`` (for error weighting)."""
    psi, dpsi = eval_with_dt(ts, grid.points)
    fv = _f_on_grid(sys, grid, psi)
    fmat = sys.mass.apply(dpsi) - fv
    return fmat.T.ravel(), dpsi, psi


def _jac_stack(sys: IvpSystem, grid: CollocationGrid, psi: np.ndarray) -> np.ndarray:
    out = np.empty((grid.n, sys.m, sys.m))
    with np.errstate(all="ignore"):
        for l, t in enumerate(grid.points):
            out[l] = sys.jacobian(t, psi[l])
    return out


def jacobian_from_tangents(sys: IvpSystem, grid: CollocationGrid, psi: np.ndarray,
                           dw: np.ndarray, dtdw: np.ndarray, sparse: bool = False):
    """Assemble the weight Jacobian from given sensitivity tensors.

    ``dw``/``dtdw`` have shape (n, m, r); the column count ``r`` may differ
    from the kernel count when the caller works in a transformed weight basis.
    """
    n, m, nk = dw.shape
    a = _jac_stack(sys, grid, psi)                   # (n, m, m)
    if not sparse:
        mdense = sys.mass.as_dense(m)
        j4 = np.einsum("ik,lkj->ilkj", mdense, dtdw) - np.einsum("lik,lkj->ilkj", a, dw)
        return j4.reshape(n * m, m * nk)

    pattern = sys.sparsity
    if pattern is None:
        pattern = np.ones((m, m), dtype=bool)
    pat = pattern | (sys.mass.as_dense(m) != 0.0)
    bi, bk = np.nonzero(pat)                         # block row state, block col state
    mvals = sys.mass.as_dense(m)[bi, bk]             # (P,)
    avals = a[:, bi, bk]                             # (n, P)
    vals = mvals[None, :, None] * dtdw[:, bk, :] - avals[:, :, None] * dw[:, bk, :]
    rows = (bi[None, :, None] * n + np.arange(n)[:, None, None])
    cols = (bk[None, :, None] * nk + np.arange(nk)[None, None, :])
    rows, cols = np.broadcast_arrays(rows, cols)
    return sp.coo_matrix(
        (vals.ravel(), (rows.ravel(), cols.ravel())), shape=(n * m, m * nk)
    ).tocsc()


def assemble_jacobian(sys: IvpSystem, ts: TrialSolution, grid: CollocationGrid,
                      sparse: bool = False):
    """Jacobian of the residual with respect to the flattened weights.

    Dense: ndarray of shape ``(n m, m N)``.  Sparse: CSC matrix assembled only
    on the declared pattern blocks (mass nonzeros are always included).
    """
    psi, _ = eval_with_dt(ts, grid.points)
    dw, dtdw = weight_tangents(ts, grid.points)      # (n, m, N) each
    return jacobian_from_tangents(sys, grid, psi, dw, dtdw, sparse=sparse)


def fd_jacobian_f(sys: IvpSystem, t: float, u: np.ndarray, h: float | None = None) -> np.ndarray:
    """Forward-difference state Jacobian of ``f``; fallback when none is supplied."""
    u = np.asarray(u, dtype=float)
    f0 = np.asarray(sys.f(t, u), dtype=float)
    out = np.empty((sys.m, sys.m))
    for k in range(sys.m):
        hk = h if h is not None else np.sqrt(_EPS) * (1.0 + abs(u[k]))
        up = u.copy()
        up[k] += hk
        out[:, k] = (np.asarray(sys.f(t, up), dtype=float) - f0) / hk
    return out
