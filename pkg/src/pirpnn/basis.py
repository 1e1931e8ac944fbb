"""Per-subinterval Gaussian random-feature basis.

Each subinterval ``[t_start, t_end]`` carries ``N`` Gaussian kernels
``g_j(t) = exp(-alpha_j (t - c_j)^2)`` with equispaced centers spanning the
subinterval and shape parameters drawn uniformly from ``[0, alpha_max]``,
``alpha_max = N^2 / (c^2 dt^2)``.  Shapes are sampled independently per state
variable unless sharing is requested.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class BasisConfig:
    """Hyperparameters of the random basis: kernel count, shape-interval scale, seed."""

    n_kernels: int = 20
    c: float = 12.0
    rng_seed: int = 0
    share_shapes: bool = False

    def __post_init__(self):
        if self.n_kernels < 2:
            raise InputError("n_kernels must be >= 2")
        if self.c <= 0:
            raise InputError("c must be positive")


def alpha_upper_bound(n_kernels: int, c: float, dt: float) -> float:
    """Upper end of the uniform shape distribution, ``N^2 / (c^2 dt^2)``."""
    return n_kernels**2 / (c**2 * dt**2)


@dataclass(frozen=True)
class RandomBasis:
    """Immutable kernel parameters for one subinterval.

    ``shapes`` has one row per state variable and one column per kernel; rows
    may be a broadcast view of a single sampled row when shapes are shared.
    """

    t_start: float
    t_end: float
    centers: np.ndarray   # (N,)
    shapes: np.ndarray    # (m, N), entries in [0, alpha_max]
    alpha_max: float
    seed: object = None

    @property
    def n_kernels(self) -> int:
        return self.centers.size

    @property
    def n_states(self) -> int:
        return self.shapes.shape[0]

    @property
    def width(self) -> float:
        return self.t_end - self.t_start


def build_basis(cfg: BasisConfig, t_start: float, t_end: float, m: int,
                rng: np.random.Generator | None = None,
                seed=None) -> RandomBasis:
    """Sample a random basis for ``[t_start, t_end]`` and ``m`` state variables.

    The generator is taken from ``rng`` if given, otherwise derived from
    ``seed`` (an int or tuple of ints; defaults to ``cfg.rng_seed``), so that
    identical seeds reproduce the basis bit for bit.
    """
    dt = t_end - t_start
    if not dt > 0:
        raise InputError(f"subinterval must have positive width, got dt={dt}")
    if m < 1:
        raise InputError("state count must be >= 1")
    if rng is None:
        if seed is None:
            seed = cfg.rng_seed
        rng = np.random.default_rng(np.random.SeedSequence(seed))
    n = cfg.n_kernels
    centers = t_start + np.arange(n) * (dt / (n - 1))
    centers[-1] = t_end
    amax = alpha_upper_bound(n, cfg.c, dt)
    rows = 1 if cfg.share_shapes else m
    shapes = rng.uniform(0.0, amax, size=(rows, n))
    if cfg.share_shapes:
        shapes = np.broadcast_to(shapes, (m, n))
    shapes.flags.writeable = False
    centers.flags.writeable = False
    return RandomBasis(
        t_start=t_start, t_end=t_end, centers=centers, shapes=shapes,
        alpha_max=amax, seed=seed,
    )


def eval_kernels(basis: RandomBasis, i: int, t) -> np.ndarray:
    """Kernel values ``exp(-alpha_ji (t - c_j)^2)`` for state ``i``; in (0, 1]."""
    t = np.asarray(t, dtype=float)
    d = t[..., None] - basis.centers
    return np.exp(-basis.shapes[i] * d * d)


def eval_kernel_derivatives(basis: RandomBasis, i: int, t) -> np.ndarray:
    """Time derivative of each kernel: ``-2 alpha_ji (t - c_j) g_ji(t)``."""
    t = np.asarray(t, dtype=float)
    d = t[..., None] - basis.centers
    a = basis.shapes[i]
    return -2.0 * a * d * np.exp(-a * d * d)


def kernel_tensors(basis: RandomBasis, ts: np.ndarray):
    """Shared evaluation for all states on a time grid.

    Returns ``(d, g)`` with ``d[l, j] = t_l - c_j`` and
    ``g[l, i, j] = exp(-alpha_ji d[l, j]^2)``.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    d = ts[:, None] - basis.centers[None, :]
    g = np.exp(-basis.shapes[None, :, :] * (d * d)[:, None, :])
    return d, g


def expected_kernel_stats(alpha_max: float, dt: float) -> tuple[float, float]:
    """Mean and variance of the kernel value at offset ``dt`` over the shape draw.

    ``dt = 0`` returns the limit values ``(1, 0)``.
    """
    if alpha_max <= 0:
        raise InputError("alpha_max must be positive")
    x = alpha_max * dt * dt
    if x == 0.0:
        return 1.0, 0.0
    mean = -np.expm1(-x) / x
    second = -np.expm1(-2.0 * x) / (2.0 * x)
    return float(mean), float(second - mean**2)
