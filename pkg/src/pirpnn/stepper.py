"""Adaptive integration loop: quasi-Newton collocation steps with local error control.

One step trains the output weights of the subinterval's trial solution by
damped-free Gauss-Newton iterations on the collocation residual.  The weight
Jacobian is factorized only on the refresh iterations (0 and 1 by default) and
reused afterwards.  A pass applies its update after the acceptance error of
the entry residual is recorded, so an accepted step always returns weights
that are one update beyond the iterate that passed the error test.  Step
widths follow the elementary local error controller
``dt* = safety * gamma * dt`` with ``gamma = (1/err)^(1/(nu+1))`` clamped to
``[gamma_min, gamma_max]``, and each new subinterval is warm-started from the
previous endpoint derivative.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .basis import BasisConfig, RandomBasis, build_basis, kernel_tensors
from .dae_init import consistent_state, constraint_residual
from .errors import DivergenceError, InputError, StallError
from .residual import (
    CollocationGrid,
    IvpSystem,
    assemble_jacobian,
    make_grid,
    residual_and_derivative,
)
from .trial import (
    TrialSolution,
    Trajectory,
    eval as trial_eval,
    eval_dt,
    eval_with_dt as trial_eval_with_dt,
    weight_tangents,
)

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SolverConfig:
    """All solver knobs: network size, tolerances, controller bounds, seeding."""

    n_kernels: int = 20
    n_collocation: int = 20
    c: float = 12.0
    abs_tol: float = 1e-6
    rel_tol: float = 1e-6
    max_newton: int = 5
    gamma_min: float = 0.1
    gamma_max: float = 4.0
    safety: float = 0.8
    rng_seed: int = 0
    sparse: str = "auto"            # "auto" | "on" | "off"
    sparse_threshold: int = 1000
    jac_refresh: tuple = (0, 1)
    svd_rtol: float | None = None
    tikhonov: float = 0.0
    share_shapes: bool = False
    init_dae: bool = True
    audit: bool = True

    def __post_init__(self):
        if not (0.0 < self.gamma_min < 1.0 < self.gamma_max):
            raise InputError("need 0 < gamma_min < 1 < gamma_max")
        if not (0.0 < self.safety <= 1.0):
            raise InputError("safety factor must be in (0, 1]")
        if self.max_newton < 1:
            raise InputError("max_newton must be >= 1")
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise InputError("tolerances must be positive")
        if self.sparse not in ("auto", "on", "off"):
            raise InputError("sparse must be one of auto/on/off")

    def basis_config(self) -> BasisConfig:
        return BasisConfig(
            n_kernels=self.n_kernels, c=self.c, rng_seed=self.rng_seed,
            share_shapes=self.share_shapes,
        )


@dataclass
class StepReport:
    """Outcome of one attempted subinterval."""

    accepted: bool
    err: float
    iterations: int
    dt: float = 0.0
    dt_next: float = 0.0
    factorizations: int = 0
    err_final: float | None = None


@dataclass
class SolveStats:
    accepted: int = 0
    rejected: int = 0
    newton_iterations: int = 0
    factorizations: int = 0
    wall_time: float = 0.0
    audit_warnings: int = 0

    @property
    def n_points(self) -> int:
        return self.accepted + 1


def error_measure(fvec: np.ndarray, dpsi_grid: np.ndarray,
                  abs_tol: float, rel_tol: float) -> float:
    """Tolerance-weighted l2 norm of the residual.

    ``fvec`` is ordered state-major (q = l + (i-1) n); ``dpsi_grid`` holds the
    trial derivative at the same collocation points, shape (n, m).  The weight
    uses the derivative magnitude so it stays positive.
    """
    n, m = dpsi_grid.shape
    weights = abs_tol + rel_tol * np.abs(dpsi_grid.T)   # (m, n), same order as fvec
    return float(np.linalg.norm(fvec / weights.ravel()))


def adapt_step(err: float, nu: int, dt: float, cfg: SolverConfig,
               t: float | None = None, t_end: float | None = None) -> float:
    """Next step width from the elementary local error controller.

    ``gamma = (1/err)^(1/(nu+1))`` clamped to ``[gamma_min, gamma_max^(1/(nu+1))]``:
    the growth bound is applied in the same iteration-count root as the error
    ratio, so a step that needed many updates grows cautiously while the hard
    bounds ``[gamma_min, gamma_max]`` always hold.  ``err = 0`` takes the
    growth-bound branch.  When ``t`` and ``t_end`` are given the result is
    clamped so the next knot cannot overshoot the horizon.
    """
    hi = cfg.gamma_max ** (1.0 / (nu + 1))
    if err == 0.0:
        gamma = hi
    else:
        with np.errstate(over="ignore"):
            gamma = float(np.clip((1.0 / err) ** (1.0 / (nu + 1)), cfg.gamma_min, hi))
    dt_next = cfg.safety * gamma * dt
    if t is not None and t_end is not None:
        dt_next = min(dt_next, t_end - t)
    return dt_next


def initial_step(sys: IvpSystem, t0: float, z: np.ndarray,
                 abs_tol: float, rel_tol: float) -> float:
    """Starting step width via the standard two-probe selection procedure.

    Scaled norms run over differential components only, so algebraic rows of a
    DAE do not distort the estimate.
    """
    z = np.asarray(z, dtype=float)
    f0 = np.asarray(sys.f(t0, z), dtype=float)
    if not np.all(np.isfinite(f0)):
        raise InputError("f is non-finite at the initial state (inconsistent initial condition?)")
    diff = sys.differential_rows()
    sc = abs_tol + np.abs(z) * rel_tol
    d0 = float(np.linalg.norm((z / sc)[diff]))
    d1 = float(np.linalg.norm((f0 / sc)[diff]))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    f1 = np.asarray(sys.f(t0 + h0, z + h0 * f0), dtype=float)
    if np.all(np.isfinite(f1)):
        d2 = float(np.linalg.norm(((f1 - f0) / sc)[diff])) / h0
    else:
        d2 = np.nan
    dmax = max(d1, d2)
    if not np.isfinite(dmax) or dmax <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / dmax) ** 0.5   # error-contraction order p = 1
    return min(100.0 * h0, h1)


def continuation_guess(prev: TrialSolution | None, t_k: float,
                       new_basis: RandomBasis, grid: CollocationGrid) -> np.ndarray:
    """Warm-start weights reproducing the previous endpoint derivative.

    Row i solves ``w_i . phi_i = dpsi_i/dt(t_k)`` in the minimum-norm sense,
    with ``phi_i`` the new kernels at the first collocation point.  Without a
    previous subinterval the derivative is taken as zero, giving zero weights.
    """
    m = new_basis.n_states
    if prev is None:
        return np.zeros((m, new_basis.n_kernels))
    der = np.asarray(eval_dt(prev, t_k), dtype=float)
    _, g = kernel_tensors(new_basis, np.array([grid.points[0]]))
    phi = g[0]                                   # (m, N), strictly positive
    return der[:, None] * phi / np.sum(phi * phi, axis=1)[:, None]


def _use_sparse(sys: IvpSystem, cfg: SolverConfig) -> bool:
    if cfg.sparse == "on":
        return True
    if cfg.sparse == "off":
        return False
    return sys.sparsity is not None or sys.m * cfg.n_kernels > cfg.sparse_threshold


class _StructuredSparseFactor:
    """Truncated least-squares factor for large sparse collocation Jacobians.

    The per-state sensitivity stack ``[dtdw_k; dw_k]`` is exponentially
    ill-conditioned (Gaussian kernels), which is what the dense route's SVD
    truncation absorbs.  Here each state block is orthonormalized by its own
    truncated SVD (same ``max(dim) * eps * sigma_max`` cutoff), the Jacobian is
    assembled in the transformed basis where only the benign physical coupling
    remains, and the resulting well-conditioned least-squares problem is solved
    through lightly damped normal equations with refinement.  Solutions map
    back with the truncated directions pinned to zero, matching the behavior
    of a rank-revealing sparse factorization.
    """

    def __init__(self, sys: IvpSystem, ts: TrialSolution, grid: CollocationGrid,
                 psi: np.ndarray, dw: np.ndarray, dtdw: np.ndarray, damp: float = 0.0):
        import scipy.sparse as sp
        import scipy.sparse.linalg as spla

        n, m, nk = dw.shape
        stack = np.concatenate([dtdw, dw], axis=0).transpose(1, 0, 2)  # (m, 2n, N)
        u, s, vt = np.linalg.svd(stack, full_matrices=False)
        cut = max(2 * n, nk) * _EPS * s[:, :1]
        inv = np.where(s > cut, 1.0 / np.where(s == 0.0, 1.0, s), 0.0)
        self._t = vt.transpose(0, 2, 1) * inv[:, None, :]              # (m, N, N)
        dw_t = np.einsum("lkj,kjr->lkr", dw, self._t)
        dtdw_t = np.einsum("lkj,kjr->lkr", dtdw, self._t)
        from .residual import jacobian_from_tangents

        jac = jacobian_from_tangents(sys, grid, psi, dw_t, dtdw_t, sparse=True)
        if not np.all(np.isfinite(jac.data)):
            raise InputError("non-finite Jacobian")
        self._jac = jac
        abs_j = abs(jac)
        sigma_hi = float(np.sqrt(abs_j.sum(axis=0).max() * abs_j.sum(axis=1).max()))
        lam = max(damp, 1e-8 * sigma_hi)
        cols = jac.shape[1]
        self._lu = spla.splu((jac.T @ jac + lam**2 * sp.identity(cols, format="csc")).tocsc())
        self._shape = (m, nk)

    def solve(self, b: np.ndarray) -> np.ndarray:
        jac = self._jac
        y = self._lu.solve(jac.T @ b)
        for _ in range(2):
            y = y + self._lu.solve(jac.T @ (b - jac @ y))
        y = y.reshape(self._shape)
        return np.einsum("kjr,kr->kj", self._t, y).ravel()


def _defect_error(sys: IvpSystem, ts: TrialSolution, grid: CollocationGrid,
                  cfg: SolverConfig) -> float:
    """Local-error estimate from the defect on the midpoint (validation) grid.

    Collocation drives the residual to zero only at the training nodes; the
    defect half a spacing away is what actually propagates.  For differential
    rows the propagated state error is the signed quadrature of the defect
    over the step (midpoint rule, so inter-node cancellation is kept); for
    algebraic rows the defect itself is the constraint violation.  Both are
    weighed against the state tolerance and must pass the same ``< 1`` test
    as the residual measure.
    """
    dt = grid.t_end - grid.t_start
    half = 0.5 * dt / grid.n
    probe = CollocationGrid(grid.t_start, grid.t_end, grid.points - half)
    fvec, _, psi = residual_and_derivative(sys, ts, probe)
    if not np.all(np.isfinite(fvec)):
        return np.inf
    defect = np.abs(fvec.reshape(sys.m, grid.n))       # rows follow state-major order
    est = defect.sum(axis=1) * (dt / grid.n)           # bound on the propagated error
    alg = sys.algebraic_rows
    if alg.size:
        est[alg] = defect[alg].max(axis=1)
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(psi).max(axis=0)
    return float(np.linalg.norm(est / scale))


def newton_step(sys: IvpSystem, basis: RandomBasis, z: np.ndarray,
                grid: CollocationGrid, w_init: np.ndarray,
                cfg: SolverConfig) -> tuple[np.ndarray, StepReport]:
    """Train the subinterval weights; accept when the weighted residual drops below 1.

    Damped Gauss-Newton with monotone line search: the Jacobian is factorized
    on the refresh iterations and reused afterwards, every update is halved
    until it reduces the error measure (which keeps amplified numerically-null
    weight components out of the iterate), and iteration continues while
    updates still pay off, up to the iteration budget.  Acceptance requires
    the final residual measure below 1 and the staggered-grid defect estimate
    to pass the same test; the reported ``err`` is the larger of the two.  A
    residual that is exactly zero short-circuits with zero iterations.
    Non-finite residuals reject the step with ``err = inf``.
    """
    sparse = _use_sparse(sys, cfg)
    w = np.array(w_init, dtype=float)
    ts = TrialSolution(grid.t_start, z, w, basis)
    fvec, dpsi, _ = residual_and_derivative(sys, ts, grid)
    if not np.all(np.isfinite(fvec)):
        return w, StepReport(False, np.inf, 0)
    err = error_measure(fvec, dpsi, cfg.abs_tol, cfg.rel_tol)
    if err == 0.0:
        return w, StepReport(True, 0.0, 0, err_final=0.0)

    factor = None
    nfact = 0
    nu = 0
    while nu < cfg.max_newton:
        if nu in cfg.jac_refresh or factor is None:
            ts = TrialSolution(grid.t_start, z, w, basis)
            try:
                if sparse:
                    psi, _ = trial_eval_with_dt(ts, grid.points)
                    dw_t, dtdw_t = weight_tangents(ts, grid.points)
                    factor = _StructuredSparseFactor(
                        sys, ts, grid, psi, dw_t, dtdw_t, damp=cfg.tikhonov
                    )
                else:
                    jac = assemble_jacobian(sys, ts, grid, sparse=False)
                    factor = linalg.factorize_pinv(jac, rtol=cfg.svd_rtol)
            except (InputError, np.linalg.LinAlgError, RuntimeError):
                return w, StepReport(False, np.inf, nu, factorizations=nfact)
            nfact += 1
        dw = factor.solve(-fvec).reshape(w.shape)
        scale = 1.0
        improved = False
        for _ in range(8):
            w_try = w + scale * dw
            ts = TrialSolution(grid.t_start, z, w_try, basis)
            fvec_try, dpsi_try, _ = residual_and_derivative(sys, ts, grid)
            if np.all(np.isfinite(fvec_try)):
                err_try = error_measure(fvec_try, dpsi_try, cfg.abs_tol, cfg.rel_tol)
                if err_try < err:
                    improved = True
                    break
            scale *= 0.5
        if not improved:
            break                      # stagnated at the attainable floor
        # Commit the improving update; polish further while updates pay off.
        w, fvec, err_prev, err = w_try, fvec_try, err, err_try
        nu += 1
        if err < 1.0 and err > 0.1 * err_prev:
            break

    if err < 1.0:
        defect = _defect_error(sys, TrialSolution(grid.t_start, z, w, basis), grid, cfg)
        err_report = max(err, defect)
    else:
        err_report = err
    return w, StepReport(bool(err_report < 1.0), err_report, nu,
                         factorizations=nfact, err_final=err)


def _stall_width(t: float) -> float:
    return 16.0 * _EPS * max(abs(t), 1.0)


def solve(sys: IvpSystem, t_span, z, cfg: SolverConfig | None = None) -> tuple[Trajectory, SolveStats]:
    """Integrate ``M u' = f(t, u)`` over ``t_span`` from ``z``.

    For DAEs the algebraic components of ``z`` are made consistent first when
    ``cfg.init_dae`` is set (default), otherwise consistency is required on
    entry.  Returns the trajectory spanning exactly the horizon and the run
    statistics; raises ``StallError``/``DivergenceError`` with the point
    reached and the partial trajectory attached on failure.
    """
    cfg = cfg or SolverConfig()
    t0, t_end = float(t_span[0]), float(t_span[1])
    if not t_end > t0:
        raise InputError("t_span must satisfy t_end > t_start")
    z = np.asarray(z, dtype=float).copy()
    if z.size != sys.m or not np.all(np.isfinite(z)):
        raise InputError("initial state has wrong length or non-finite entries")
    if sys.is_dae:
        if cfg.init_dae:
            z = consistent_state(sys, t0, z)
        else:
            g0 = constraint_residual(sys, t0, z)
            if np.linalg.norm(g0, np.inf) > 1e-8 * (1.0 + np.linalg.norm(z, np.inf)):
                raise InputError(
                    "initial state violates the algebraic constraints; "
                    "run consistent initialization or set init_dae"
                )

    bcfg = cfg.basis_config()
    stats = SolveStats()
    started = time.perf_counter()
    dt = min(initial_step(sys, t0, z, cfg.abs_tol, cfg.rel_tol), t_end - t0)

    pieces: list[TrialSolution] = []
    prev: TrialSolution | None = None
    t, zk = t0, z
    k = 0
    while True:
        remaining = t_end - t
        if remaining <= 0.0:
            break
        clamped = dt >= remaining
        dt_eff = remaining if clamped else dt
        if not clamped and dt_eff < _stall_width(t):
            stats.wall_time = time.perf_counter() - started
            raise StallError(
                f"step size collapsed to {dt_eff:.3e} at t = {t:.6e}",
                t_reached=t,
                trajectory=_partial(t0, t_end, pieces),
            )
        t_next = t_end if clamped else t + dt_eff
        basis = build_basis(bcfg, t, t_next, sys.m, seed=(cfg.rng_seed, k))
        grid = make_grid(t, t_next, cfg.n_collocation)
        w0 = continuation_guess(prev, t, basis, grid)
        w, report = newton_step(sys, basis, zk, grid, w0, cfg)
        stats.newton_iterations += report.iterations
        stats.factorizations += report.factorizations
        report.dt = dt_eff
        dt = adapt_step(report.err, report.iterations, dt_eff, cfg)
        report.dt_next = dt
        if report.accepted:
            piece = TrialSolution(t, zk, w, basis)
            z_next = trial_eval(piece, t_next)
            if not np.all(np.isfinite(z_next)):
                stats.wall_time = time.perf_counter() - started
                raise DivergenceError(
                    f"non-finite state at t = {t_next:.6e}",
                    t_reached=t,
                    trajectory=_partial(t0, t_end, pieces),
                )
            if cfg.audit:
                _audit_step(sys, piece, grid, zk, cfg, report, stats)
            pieces.append(piece)
            prev = piece
            t, zk = t_next, z_next
            k += 1
            stats.accepted += 1
        else:
            stats.rejected += 1

    stats.wall_time = time.perf_counter() - started
    traj = Trajectory(t0, t_end, pieces).finalize()
    return traj, stats


def _partial(t0: float, t_end: float, pieces: list[TrialSolution]) -> Trajectory | None:
    if not pieces:
        return None
    return Trajectory(t0, t_end, pieces).finalize()


def _audit_step(sys, piece, grid, z_anchor, cfg, report, stats):
    # Exact-IC must hold bit for bit by construction of the trial solution.
    psi0 = trial_eval(piece, piece.t0)
    if not np.all(psi0 == z_anchor):
        raise DivergenceError(f"exact-IC audit failed at t = {piece.t0}")
    if report.err_final is None:
        fvec, dpsi, _ = residual_and_derivative(sys, piece, grid)
        report.err_final = error_measure(fvec, dpsi, cfg.abs_tol, cfg.rel_tol)
    if not report.err_final < 1.0:
        stats.audit_warnings += 1
        warnings.warn(
            f"post-accept residual audit at t = {piece.t0:.6e}: err_final = {report.err_final:.3f}",
            RuntimeWarning,
            stacklevel=3,
        )
