"""Least-squares linear solves behind the Newton core.

Dense systems go through a truncated-SVD pseudoinverse whose factorization can
be reused across right-hand sides.  Large systems go through a sparse
minimum-2-norm solve: a sparse LU fast path for square nonsingular matrices
(where the least-squares solution is unique and equals the pseudoinverse
solution) with an LSQR fallback that handles rectangular and rank-deficient
matrices.  Both routes return the minimum-norm least-squares solution up to
their rank tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InputError

_EPS = np.finfo(float).eps


def _as_dense(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InputError(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError("matrix contains non-finite entries")
    return a


def _check_rhs(b, rows: int) -> np.ndarray:
    b = np.asarray(b, dtype=float).ravel()
    if b.size != rows:
        raise InputError(f"rhs has length {b.size}, expected {rows}")
    if not np.all(np.isfinite(b)):
        raise InputError("rhs contains non-finite entries")
    return b


def default_truncation(shape: tuple[int, int], sigma_max: float) -> float:
    """Singular values at or below ``max(m, n) * eps * sigma_max`` are dropped."""
    return max(shape) * _EPS * sigma_max


@dataclass(frozen=True)
class TruncatedSvd:
    """Rank-truncated SVD of a dense matrix, reusable for repeated solves.

    Retains singular values strictly above ``threshold``; ``solve`` applies
    ``V_eps diag(1/s) U_eps^T`` to a right-hand side, i.e. the minimum-norm
    least-squares solution restricted to the retained subspace.
    """

    u: np.ndarray          # (m, r)
    s: np.ndarray          # (r,)
    vt: np.ndarray         # (r, n)
    threshold: float
    shape: tuple[int, int]

    @property
    def rank(self) -> int:
        return self.s.size

    def solve(self, b) -> np.ndarray:
        b = _check_rhs(b, self.shape[0])
        if self.rank == 0:
            return np.zeros(self.shape[1])
        return self.vt.T @ ((self.u.T @ b) / self.s)


def factorize_pinv(a, rtol: float | None = None) -> TruncatedSvd:
    """Factor a dense matrix for repeated pseudoinverse applications.

    ``rtol`` overrides the truncation threshold (absolute, in singular-value
    units); the default keeps values above ``max(m, n) * eps * sigma_max``.
    """
    a = _as_dense(a)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    sigma_max = s[0] if s.size else 0.0
    cut = default_truncation(a.shape, sigma_max) if rtol is None else float(rtol)
    keep = s > cut
    return TruncatedSvd(
        u=u[:, keep], s=s[keep], vt=vt[keep, :], threshold=cut, shape=a.shape
    )


def pinv_solve(a, b, rtol: float | None = None) -> np.ndarray:
    """Minimum-norm least-squares solution of ``a x ~ b`` via truncated SVD."""
    return factorize_pinv(a, rtol=rtol).solve(b)


def _sigma_max_bound(a: sp.spmatrix) -> float:
    # Holder bound sigma_max <= sqrt(||A||_1 ||A||_inf); cheap and safe for the
    # norm guard below (an over-estimate only loosens the guard).
    abs_a = abs(a)
    norm1 = abs_a.sum(axis=0).max()
    norminf = abs_a.sum(axis=1).max()
    return float(np.sqrt(norm1 * norminf))


class SparseMinNormFactor:
    """Repeated minimum-2-norm solves against one assembled sparse matrix.

    Square matrices are LU-factorized once; a solution is accepted when it is
    finite and its norm is compatible with what a rank-truncated pseudoinverse
    could produce (``||x|| <= ||b|| / tol_sigma``).  Failures fall back to a
    rank-safe route: tight LSQR for small systems (its iterates live in
    ``range(A^T)``, so it converges to the minimum-norm least-squares
    solution) and Tikhonov-damped normal equations for large ones, where the
    damping ``eps^(1/3) sigma_max`` plays the role of the rank truncation.
    ``damp > 0`` forces the damped route with the given parameter.
    """

    _DIRECT_DIM = 400

    def __init__(self, a, damp: float = 0.0, rank_tol: float | None = None):
        if not sp.issparse(a):
            raise InputError("expected a scipy.sparse matrix")
        if a.shape[0] < 1 or a.shape[1] < 1 or a.nnz == 0:
            raise InputError("structurally empty sparse matrix")
        data = a.tocsc()
        if not np.all(np.isfinite(data.data)):
            raise InputError("matrix contains non-finite entries")
        self.a = data
        self.shape = data.shape
        self.damp = float(damp)
        self.sigma_hi = _sigma_max_bound(data)
        self.rank_tol = (
            default_truncation(data.shape, self.sigma_hi) if rank_tol is None else rank_tol
        )
        self._lu = None
        self._damped = None
        self._large = max(self.shape) > self._DIRECT_DIM
        if self.damp > 0.0:
            self._damped = self._damped_factor(self.damp)
        elif data.shape[0] == data.shape[1]:
            try:
                self._lu = spla.splu(data)
            except RuntimeError:
                self._lu = None  # exactly singular: regularized/LSQR route

    def _damped_factor(self, lam: float):
        n = self.shape[1]
        ata = (self.a.T @ self.a + lam**2 * sp.identity(n, format="csc")).tocsc()
        return spla.splu(ata)

    def _lsqr(self, b: np.ndarray) -> np.ndarray:
        n_it = 20 * min(self.shape) + 200
        return spla.lsqr(
            self.a, b, damp=self.damp, atol=1e-14, btol=1e-14,
            conlim=1.0 / (max(self.shape) * _EPS),
            iter_lim=n_it,
        )[0]

    def _regularized(self, b: np.ndarray) -> np.ndarray:
        # Damping level acts as the rank cutoff; refinement restores the
        # directions above it while components below stay suppressed.
        if self._damped is None:
            self._damped = self._damped_factor(1e-7 * self.sigma_hi)
        x = self._damped.solve(self.a.T @ b)
        for _ in range(3):
            r = b - self.a @ x
            x = x + self._damped.solve(self.a.T @ r)
        return x

    def solve(self, b) -> np.ndarray:
        b = _check_rhs(b, self.shape[0])
        if self.damp > 0.0:
            return self._damped.solve(self.a.T @ b)
        if self._lu is not None:
            x = self._lu.solve(b)
            if self._large:
                # The Newton caller enforces monotone progress, which guards
                # against amplified numerically-null components; only outright
                # breakdown diverts to the regularized route.
                if np.all(np.isfinite(x)):
                    return x
                return self._regularized(b)
            bnorm = np.linalg.norm(b)
            # Truncated-pinv solutions satisfy ||x|| <= ||b|| / tol; a larger
            # norm means the LU solve amplified numerically-null directions.
            if np.all(np.isfinite(x)) and (
                bnorm == 0.0 or np.linalg.norm(x) <= bnorm / self.rank_tol
            ):
                return x
        if self._large:
            return self._regularized(b)
        return self._lsqr(b)


def factorize_min2norm(a, damp: float = 0.0, rank_tol: float | None = None) -> SparseMinNormFactor:
    return SparseMinNormFactor(a, damp=damp, rank_tol=rank_tol)


def sparse_min2norm_solve(a, b, damp: float = 0.0) -> np.ndarray:
    """Minimum-2-norm least-squares solution of a sparse system ``a x ~ b``."""
    return SparseMinNormFactor(a, damp=damp).solve(b)
