"""Benchmark catalog: stiff ODE and index-1 DAE systems with analytic Jacobians.

Algebraic rows that originally contain derivatives of other states (mechanics
bead, power discharge) are closed by substituting the explicit ODE rows, so
every system is exactly of the form ``M u' = f(t, u)``.  PDE problems are
method-of-lines discretizations with second-order central differences and
boundary conditions baked into the stencils.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .residual import IvpSystem, MassMatrix


@dataclass(frozen=True)
class ReferenceGrid:
    """Evaluation-grid convention for error tables: point count and spacing."""

    count: int
    spacing: str = "linear"         # "linear" | "log"
    t_min: float = 1e-6             # first positive point of a log grid

    def build(self, t_start: float, t_end: float, count: int | None = None) -> np.ndarray:
        n = count or self.count
        if self.spacing == "linear":
            return np.linspace(t_start, t_end, n)
        if t_start != 0.0:
            raise InputError("log reference grids assume t_start = 0")
        pts = np.logspace(math.log10(self.t_min), math.log10(t_end), n - 1)
        pts[-1] = t_end
        return np.concatenate(([0.0], pts))


@dataclass
class BenchmarkSpec:
    """A fully specified initial-value benchmark.

    ``z0`` carries guesses in the algebraic slots when ``needs_init`` is set;
    consistent initialization fills them.  ``mae_context`` records
    tight-tolerance mean-absolute-error levels used by the harness tests as
    regression context only.
    """

    name: str
    system: IvpSystem
    t_span: tuple[float, float]
    z0: np.ndarray
    reference_grid: ReferenceGrid
    needs_init: bool = False
    description: str = ""
    mae_context: dict = field(default_factory=dict)

    def __post_init__(self):
        self.z0 = np.asarray(self.z0, dtype=float)
        if self.z0.size != self.system.m:
            raise InputError(f"{self.name}: initial state has wrong length")


def linear_decay() -> BenchmarkSpec:
    """Scalar test problem u' = -u, u(0) = 1, with known solution exp(-t)."""

    def f(t, u):
        return -u

    def jac(t, u):
        return np.array([[-1.0]])

    return BenchmarkSpec(
        name="linear-decay",
        system=IvpSystem(m=1, f=f, jac_f=jac, name="linear-decay"),
        t_span=(0.0, 10.0),
        z0=np.array([1.0]),
        reference_grid=ReferenceGrid(1000),
        description="scalar exponential decay (sanity problem)",
    )


def vdp(mu: float = 100.0) -> BenchmarkSpec:
    """Van der Pol relaxation oscillator; stiff with sharp gradients for large mu."""
    if mu <= 0:
        raise InputError("mu must be positive")

    def f(t, u):
        return np.array([u[1], mu * (1.0 - u[0] ** 2) * u[1] - u[0]])

    def jac(t, u):
        return np.array([
            [0.0, 1.0],
            [-2.0 * mu * u[0] * u[1] - 1.0, mu * (1.0 - u[0] ** 2)],
        ])

    return BenchmarkSpec(
        name="vdp",
        system=IvpSystem(m=2, f=f, jac_f=jac, name="vdp"),
        t_span=(0.0, 3.0 * mu),
        z0=np.array([2.0, 0.0]),
        reference_grid=ReferenceGrid(60000),
        description=f"van der Pol oscillator, mu={mu}",
    )


def robertson() -> BenchmarkSpec:
    """Autocatalytic kinetics with conservation constraint A + B + C = 1."""
    k1, k2, k3 = 0.04, 1.0e4, 3.0e7

    def f(t, u):
        a, b, c = u
        return np.array([
            -k1 * a + k2 * b * c,
            k1 * a - k2 * b * c - k3 * b * b,
            a + b + c - 1.0,
        ])

    def jac(t, u):
        a, b, c = u
        return np.array([
            [-k1, k2 * c, k2 * b],
            [k1, -k2 * c - 2.0 * k3 * b, -k2 * b],
            [1.0, 1.0, 1.0],
        ])

    return BenchmarkSpec(
        name="robertson",
        system=IvpSystem(
            m=3, f=f, jac_f=jac, mass=MassMatrix.diagonal([1.0, 1.0, 0.0]),
            name="robertson",
        ),
        t_span=(0.0, 4.0e11),
        z0=np.array([1.0, 0.0, 0.0]),
        reference_grid=ReferenceGrid(40000, spacing="log", t_min=1e-6),
        needs_init=True,
        description="Robertson kinetics, index-1 DAE",
        mae_context={"B": 2.02e-12},
    )


def bead_on_needle() -> BenchmarkSpec:
    """Bead on a rotating needle: four ODEs plus one closed algebraic row.

    The constraint ``0 = g'' + 20 g' + 100 g`` with ``g = cos(th) u3 - sin(th) u1``
    (``th = t + pi/4``) becomes, after substituting the ODE rows for the
    derivatives, a row linear in ``u5``.
    """

    def parts(t, u):
        th = t + math.pi / 4.0
        co, si = math.cos(th), math.sin(th)
        g = co * u[2] - si * u[0]
        gp = co * (u[3] - u[0]) + si * (-u[1] - u[2])
        # g'' after substitution, grouped so the u5 coefficient is exactly -1
        gpp_rest = co * (1.0 - 2.0 * u[1] - u[2] - 10.0 * u[3]) + si * (
            u[0] + 10.0 * u[1] - 2.0 * u[3]
        )
        return co, si, g, gp, gpp_rest

    def f(t, u):
        th = t + math.pi / 4.0
        co, si = math.cos(th), math.sin(th)
        _, _, g, gp, gpp_rest = parts(t, u)
        return np.array([
            u[1],
            -10.0 * u[1] + si * u[4],
            u[3],
            -10.0 * u[3] - co * u[4] + 1.0,
            (gpp_rest - u[4]) + 20.0 * gp + 100.0 * g,
        ])

    def jac(t, u):
        th = t + math.pi / 4.0
        co, si = math.cos(th), math.sin(th)
        j = np.zeros((5, 5))
        j[0, 1] = 1.0
        j[1, 1] = -10.0
        j[1, 4] = si
        j[2, 3] = 1.0
        j[3, 3] = -10.0
        j[3, 4] = -co
        j[4, 0] = si - 20.0 * co - 100.0 * si
        j[4, 1] = -2.0 * co + 10.0 * si - 20.0 * si
        j[4, 2] = -co - 20.0 * si + 100.0 * co
        j[4, 3] = -10.0 * co - 2.0 * si + 20.0 * co
        j[4, 4] = -1.0
        return j

    return BenchmarkSpec(
        name="bead",
        system=IvpSystem(
            m=5, f=f, jac_f=jac,
            mass=MassMatrix.diagonal([1.0, 1.0, 1.0, 1.0, 0.0]),
            name="bead",
        ),
        t_span=(0.0, 15.0),
        z0=np.array([1.0, -6.0, 1.0, -6.0, 0.0]),   # u5 slot holds the Newton guess
        reference_grid=ReferenceGrid(15000),
        needs_init=True,
        description="bead on a rotating needle, non-autonomous index-1 DAE",
    )


def power_discharge() -> BenchmarkSpec:
    """Power discharge control: three ODEs, three closed algebraic rows.

    Row 6 originally contains du1/dt and du3/dt; both are substituted from the
    explicit rows, leaving a row linear in u6.
    """

    def mu_and_slope(t):
        return 15.0 + 5.0 * math.tanh(t - 10.0), 5.0 / math.cosh(t - 10.0) ** 2

    def f(t, u):
        mu, mup = mu_and_slope(t)
        u1, u2, u3, u4, u5, u6 = u
        du1 = (u2 - u1) / 20.0
        return np.array([
            du1,
            -(u4 - 99.1) / 75.0,
            mu - u6,
            20.0 * u5 - u3,
            (3.35 - 0.075 * u6 + 0.001 * u6 * u6) - u4 / u5,
            (u3 / 400.0) * (mu - u6)
            + mu * mup / (1.44 * u1 * u1)
            - du1 * mu * mu / (2.985984 * u1 ** 3),
        ])

    def jac(t, u):
        mu, mup = mu_and_slope(t)
        u1, u2, u3, u4, u5, u6 = u
        c3 = mu * mu / 2.985984
        j = np.zeros((6, 6))
        j[0, 0] = -1.0 / 20.0
        j[0, 1] = 1.0 / 20.0
        j[1, 3] = -1.0 / 75.0
        j[2, 5] = -1.0
        j[3, 2] = -1.0
        j[3, 4] = 20.0
        j[4, 3] = -1.0 / u5
        j[4, 4] = u4 / (u5 * u5)
        j[4, 5] = -0.075 + 0.002 * u6
        j[5, 0] = (
            -2.0 * mu * mup / (1.44 * u1 ** 3)
            + c3 / (20.0 * u1 ** 3)
            + 3.0 * c3 * (u2 - u1) / (20.0 * u1 ** 4)
        )
        j[5, 1] = -c3 / (20.0 * u1 ** 3)
        j[5, 2] = (mu - u6) / 400.0
        j[5, 5] = -u3 / 400.0
        return j

    return BenchmarkSpec(
        name="power",
        system=IvpSystem(
            m=6, f=f, jac_f=jac,
            mass=MassMatrix.diagonal([1.0, 1.0, 1.0, 0.0, 0.0, 0.0]),
            name="power",
        ),
        t_span=(0.0, 40.0),
        z0=np.array([0.25, 0.25, 734.0, 1.0, 1.0, 1.0]),  # rows 4-6 hold guesses
        reference_grid=ReferenceGrid(40000),
        needs_init=True,
        description="power discharge control, non-autonomous index-1 DAE",
    )


def akzo_nobel(negative_clip: float = 1e-6) -> BenchmarkSpec:
    """Chemical kinetics with a square-root rate term and one linear constraint.

    ``sqrt(u2)`` is evaluated as ``sqrt(max(u2, 0))``; an iterate with
    ``u2 < -negative_clip`` returns NaN so the stepper rejects and shrinks.
    """
    k1, k2, k3, k4 = 18.7, 0.58, 0.09, 0.42
    kbig, ks, kin, rho, hh = 34.4, 115.83, 3.3, 0.9, 737.0

    def f(t, u):
        u1, u2, u3, u4, u5, u6 = u
        if u2 < -negative_clip:
            return np.full(6, np.nan)
        s = math.sqrt(u2) if u2 > 0.0 else 0.0
        r1 = k1 * u1 ** 4 * s
        r2 = k2 * u3 * u4
        r2r = (k2 / kbig) * u1 * u5
        r3 = k3 * u1 * u4 * u4
        r4 = k4 * u6 * u6 * s
        fin = kin * (rho / hh - u2)
        return np.array([
            -2.0 * r1 - r2r + r2 - r3,
            -0.5 * r1 - r3 - 0.5 * r4 + fin,
            r1 + r2r - r2,
            -r2r + r2 + r4,
            r2r - r2 - 2.0 * r3,
            ks * u1 * u4 - u6,
        ])

    def jac(t, u):
        u1, u2, u3, u4, u5, u6 = u
        s = math.sqrt(u2) if u2 > 0.0 else 0.0
        ds = 0.5 / s if u2 > 0.0 else 0.0
        j = np.zeros((6, 6))
        j[0, 0] = -8.0 * k1 * u1 ** 3 * s - (k2 / kbig) * u5 - k3 * u4 * u4
        j[0, 1] = -2.0 * k1 * u1 ** 4 * ds
        j[0, 2] = k2 * u4
        j[0, 3] = k2 * u3 - 2.0 * k3 * u1 * u4
        j[0, 4] = -(k2 / kbig) * u1
        j[1, 0] = -2.0 * k1 * u1 ** 3 * s - k3 * u4 * u4
        j[1, 1] = -0.5 * k1 * u1 ** 4 * ds - 0.5 * k4 * u6 * u6 * ds - kin
        j[1, 3] = -2.0 * k3 * u1 * u4
        j[1, 5] = -k4 * u6 * s
        j[2, 0] = 4.0 * k1 * u1 ** 3 * s + (k2 / kbig) * u5
        j[2, 1] = k1 * u1 ** 4 * ds
        j[2, 2] = -k2 * u4
        j[2, 3] = -k2 * u3
        j[2, 4] = (k2 / kbig) * u1
        j[3, 0] = -(k2 / kbig) * u5
        j[3, 1] = k4 * u6 * u6 * ds
        j[3, 2] = k2 * u4
        j[3, 3] = k2 * u3
        j[3, 4] = -(k2 / kbig) * u1
        j[3, 5] = 2.0 * k4 * u6 * s
        j[4, 0] = (k2 / kbig) * u5 - 2.0 * k3 * u4 * u4
        j[4, 2] = -k2 * u4
        j[4, 3] = -k2 * u3 - 4.0 * k3 * u1 * u4
        j[4, 4] = (k2 / kbig) * u1
        j[5, 0] = ks * u4
        j[5, 3] = ks * u1
        j[5, 5] = -1.0
        return j

    return BenchmarkSpec(
        name="akzo",
        system=IvpSystem(
            m=6, f=f, jac_f=jac,
            mass=MassMatrix.diagonal([1.0, 1.0, 1.0, 1.0, 1.0, 0.0]),
            name="akzo",
        ),
        t_span=(0.0, 180.0),
        z0=np.array([0.444, 0.0012, 0.0, 0.007, 0.0, 0.0]),
        reference_grid=ReferenceGrid(180000),
        needs_init=True,
        description="chemical kinetics, index-1 DAE",
        mae_context={"u1": 2.42e-9},
    )


def belousov_zhabotinsky() -> BenchmarkSpec:
    """Oscillating-reaction kinetics; very stiff through widely spread rates.

    State order (A, Y, X, P, B, Z, Q).
    """
    k1, k2, k3, k4, k5 = 4.72, 3.0e9, 1.5e4, 4.0e7, 1.0

    def f(t, u):
        a, y, x, p, b, z, q = u
        return np.array([
            -k1 * a * y,
            -k1 * a * y - k2 * x * y + k5 * z,
            k1 * a * y - k2 * x * y + k3 * b * x - 2.0 * k4 * x * x,
            k2 * x * y,
            -k3 * b * x,
            k3 * b * x - k5 * z,
            k4 * x * x,
        ])

    def jac(t, u):
        a, y, x, p, b, z, q = u
        j = np.zeros((7, 7))
        j[0, 0] = -k1 * y
        j[0, 1] = -k1 * a
        j[1, 0] = -k1 * y
        j[1, 1] = -k1 * a - k2 * x
        j[1, 2] = -k2 * y
        j[1, 5] = k5
        j[2, 0] = k1 * y
        j[2, 1] = k1 * a - k2 * x
        j[2, 2] = -k2 * y + k3 * b - 4.0 * k4 * x
        j[2, 4] = k3 * x
        j[3, 1] = k2 * x
        j[3, 2] = k2 * y
        j[4, 2] = -k3 * b
        j[4, 4] = -k3 * x
        j[5, 2] = k3 * b
        j[5, 4] = k3 * x
        j[5, 5] = -k5
        j[6, 2] = 2.0 * k4 * x
        return j

    return BenchmarkSpec(
        name="bz",
        system=IvpSystem(m=7, f=f, jac_f=jac, name="bz"),
        t_span=(0.0, 40.0),
        z0=np.array([0.066, 0.0, 0.0, 0.0, 0.066, 0.002, 0.0]),
        reference_grid=ReferenceGrid(40000),
        description="Belousov-Zhabotinsky kinetics, stiff ODEs",
    )


def allen_cahn(nu: float = 0.01, interior: int = 100) -> BenchmarkSpec:
    """Phase-field reaction-diffusion on [-1, 1] with Dirichlet values -1, +1.

    ``interior`` unknowns on an equispaced grid of ``interior + 2`` points;
    boundary values are baked into the stencil.  Tridiagonal Jacobian pattern.
    """
    m = interior
    dx = 2.0 / (interior + 1)
    x = -1.0 + dx * np.arange(1, interior + 1)
    c = nu / dx**2

    def f(t, u):
        up = np.empty(m + 2)
        up[0], up[-1] = -1.0, 1.0
        up[1:-1] = u
        lap = up[2:] - 2.0 * up[1:-1] + up[:-2]
        return c * lap + u - u**3

    def jac(t, u):
        j = np.zeros((m, m))
        idx = np.arange(m)
        j[idx, idx] = -2.0 * c + 1.0 - 3.0 * u**2
        j[idx[:-1], idx[:-1] + 1] = c
        j[idx[1:], idx[1:] - 1] = c
        return j

    pattern = np.zeros((m, m), dtype=bool)
    idx = np.arange(m)
    pattern[idx, idx] = True
    pattern[idx[:-1], idx[:-1] + 1] = True
    pattern[idx[1:], idx[1:] - 1] = True

    z0 = 0.53 * x + 0.47 * np.sin(-1.5 * np.pi * x)
    spec = BenchmarkSpec(
        name="allen-cahn",
        system=IvpSystem(m=m, f=f, jac_f=jac, sparsity=pattern, name="allen-cahn"),
        t_span=(0.0, 70.0),
        z0=z0,
        reference_grid=ReferenceGrid(7000),
        description=f"Allen-Cahn phase field, nu={nu}, {interior} unknowns",
    )
    spec.x_grid = x
    return spec


def kuramoto_sivashinsky(points: int = 201) -> BenchmarkSpec:
    """Fourth-order chaotic PDE on [0, 32 pi] with periodic wrapping.

    ``points`` grid points give ``points - 1`` independent unknowns with
    ``dx = 32 pi / points``; indices wrap modulo the unknown count.
    Pentadiagonal-circulant Jacobian pattern.
    """
    m = points - 1
    dx = 32.0 * np.pi / points
    x = dx * np.arange(m)
    c1, c2, c4 = 1.0 / (2.0 * dx), 1.0 / dx**2, 1.0 / dx**4

    def f(t, u):
        up1, um1 = np.roll(u, -1), np.roll(u, 1)
        up2, um2 = np.roll(u, -2), np.roll(u, 2)
        return (
            -u * (up1 - um1) * c1
            - (up1 - 2.0 * u + um1) * c2
            - (up2 - 4.0 * up1 + 6.0 * u - 4.0 * um1 + um2) * c4
        )

    def jac(t, u):
        up1, um1 = np.roll(u, -1), np.roll(u, 1)
        j = np.zeros((m, m))
        idx = np.arange(m)
        j[idx, (idx + 1) % m] = -u * c1 - c2 + 4.0 * c4
        j[idx, (idx - 1) % m] = u * c1 - c2 + 4.0 * c4
        j[idx, idx] = -(up1 - um1) * c1 + 2.0 * c2 - 6.0 * c4
        j[idx, (idx + 2) % m] = -c4
        j[idx, (idx - 2) % m] = -c4
        return j

    pattern = np.zeros((m, m), dtype=bool)
    idx = np.arange(m)
    for off in (-2, -1, 0, 1, 2):
        pattern[idx, (idx + off) % m] = True

    z0 = np.cos(x / 16.0) * (1.0 + np.sin(x / 16.0))
    spec = BenchmarkSpec(
        name="ks",
        system=IvpSystem(m=m, f=f, jac_f=jac, sparsity=pattern, name="ks"),
        t_span=(0.0, 100.0),
        z0=z0,
        reference_grid=ReferenceGrid(100000),
        description=f"Kuramoto-Sivashinsky, {m} unknowns, periodic",
    )
    spec.x_grid = x
    return spec


REGISTRY = {
    "linear-decay": linear_decay,
    "vdp": vdp,
    "robertson": robertson,
    "bead": bead_on_needle,
    "power": power_discharge,
    "akzo": akzo_nobel,
    "bz": belousov_zhabotinsky,
    "allen-cahn": allen_cahn,
    "ks": kuramoto_sivashinsky,
}


def get_problem(name: str) -> BenchmarkSpec:
    """Look up a benchmark by registry name."""
    try:
        factory = REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(REGISTRY))
        raise InputError(f"unknown problem {name!r}; registered: {known}") from None
    return factory()
