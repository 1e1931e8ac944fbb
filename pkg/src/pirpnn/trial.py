"""Continuous trial solution over one subinterval and the assembled trajectory.

A trial solution for state ``i`` is ``psi_i(t) = z_i + (t - t0) * w_i . g_i(t)``
with anchor state ``z`` at the subinterval start ``t0`` and the state's kernel
vector ``g_i``.  The initial condition is satisfied identically for any
weights, and adjacent subintervals are continuous because each anchor is the
evaluated endpoint of its predecessor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import RandomBasis, kernel_tensors
from .errors import InputError


@dataclass(frozen=True)
class TrialSolution:
    """Weights and anchor for one subinterval; immutable once a step is accepted."""

    t0: float
    z: np.ndarray         # (m,)
    weights: np.ndarray   # (m, N)
    basis: RandomBasis

    @property
    def m(self) -> int:
        return self.z.size

    @property
    def t_end(self) -> float:
        return self.basis.t_end


def _scalar_in(t):
    return np.isscalar(t) or np.asarray(t).ndim == 0


def eval(ts: TrialSolution, t) -> np.ndarray:  # noqa: A001 - spec operation name
    """State values at time(s) ``t``; shape (m,) for scalar t, else (len(t), m)."""
    scalar = _scalar_in(t)
    tv = np.atleast_1d(np.asarray(t, dtype=float))
    _, g = kernel_tensors(ts.basis, tv)
    psi = ts.z[None, :] + (tv - ts.t0)[:, None] * np.einsum("lij,ij->li", g, ts.weights)
    return psi[0] if scalar else psi


def eval_dt(ts: TrialSolution, t) -> np.ndarray:
    """Time derivative of the trial solution at time(s) ``t``."""
    scalar = _scalar_in(t)
    tv = np.atleast_1d(np.asarray(t, dtype=float))
    d, g = kernel_tensors(ts.basis, tv)
    aw = ts.basis.shapes * ts.weights
    dpsi = np.einsum("lij,ij->li", g, ts.weights) - 2.0 * (tv - ts.t0)[:, None] * np.einsum(
        "lij,ij,lj->li", g, aw, d
    )
    return dpsi[0] if scalar else dpsi


def eval_with_dt(ts: TrialSolution, tv: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values and time derivative on a grid with one shared kernel evaluation."""
    tv = np.atleast_1d(np.asarray(tv, dtype=float))
    d, g = kernel_tensors(ts.basis, tv)
    shift = (tv - ts.t0)[:, None]
    s0 = np.einsum("lij,ij->li", g, ts.weights)
    psi = ts.z[None, :] + shift * s0
    aw = ts.basis.shapes * ts.weights
    dpsi = s0 - 2.0 * shift * np.einsum("lij,ij,lj->li", g, aw, d)
    return psi, dpsi


def eval_dw(ts: TrialSolution, t) -> np.ndarray:
    """Sensitivity of values to weights: entry (i, j) is ``(t - t0) g_ji(t)``."""
    scalar = _scalar_in(t)
    tv = np.atleast_1d(np.asarray(t, dtype=float))
    _, g = kernel_tensors(ts.basis, tv)
    out = (tv - ts.t0)[:, None, None] * g
    return out[0] if scalar else out


def eval_dtdw(ts: TrialSolution, t) -> np.ndarray:
    """Mixed sensitivity of the time derivative to weights."""
    scalar = _scalar_in(t)
    tv = np.atleast_1d(np.asarray(t, dtype=float))
    d, g = kernel_tensors(ts.basis, tv)
    out = g - 2.0 * (tv - ts.t0)[:, None, None] * ts.basis.shapes[None, :, :] * d[:, None, :] * g
    return out[0] if scalar else out


def weight_tangents(ts: TrialSolution, tv: np.ndarray):
    """``(dw, dtdw)`` on a grid with one shared kernel evaluation."""
    tv = np.atleast_1d(np.asarray(tv, dtype=float))
    d, g = kernel_tensors(ts.basis, tv)
    shift = (tv - ts.t0)[:, None, None]
    dw = shift * g
    dtdw = g - 2.0 * shift * ts.basis.shapes[None, :, :] * d[:, None, :] * g
    return dw, dtdw


@dataclass
class Trajectory:
    """Accepted subintervals in order, supporting dense evaluation on the span."""

    t_start: float
    t_end: float
    pieces: list[TrialSolution] = field(default_factory=list)
    knots: np.ndarray | None = None  # (K+1,), filled when finalized

    def finalize(self):
        ks = [self.pieces[0].t0] + [p.t_end for p in self.pieces]
        self.knots = np.asarray(ks, dtype=float)
        return self

    @property
    def n_steps(self) -> int:
        return len(self.pieces)

    def __call__(self, t):
        return dense_output(self, t)


def dense_output(traj: Trajectory, ts) -> np.ndarray:
    """Evaluate the trajectory on a time grid; knots use the left subinterval.

    Raises for queries outside ``[t_start, t_end]``.
    """
    scalar = _scalar_in(ts)
    tv = np.atleast_1d(np.asarray(ts, dtype=float))
    if traj.knots is None:
        traj.finalize()
    lo, hi = traj.knots[0], traj.knots[-1]
    if tv.size and (tv.min() < lo or tv.max() > hi):
        raise InputError(
            f"dense_output query outside trajectory span [{lo}, {hi}]"
        )
    # Right-closed subintervals: an exact knot hit resolves to the older piece.
    idx = np.searchsorted(traj.knots[1:], tv, side="left")
    idx = np.clip(idx, 0, len(traj.pieces) - 1)
    out = np.empty((tv.size, traj.pieces[0].m))
    for k in np.unique(idx):
        sel = idx == k
        out[sel] = eval(traj.pieces[k], tv[sel])
    return out[0] if scalar else out
