"""Benchmark runner: reference ingestion, error tables, timing, parameter sweep.

Reference trajectories are ingested from CSV files produced once by an
established high-accuracy integrator (see ``data/references/PROVENANCE.txt``);
they are never recomputed here.  Accuracy is reported as the mean of the error
metrics over independent seeds, timing as median/min/max over the runs.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dae_init import consistent_state
from .errors import InputError, SolverFailure
from .problems import BenchmarkSpec, get_problem
from .stepper import SolverConfig, solve
from .trial import dense_output

SCHEMA_VERSION = 1


@dataclass
class ReferenceTrajectory:
    """High-accuracy states on a fixed grid, ingested from file."""

    name: str
    times: np.ndarray            # (G,), strictly increasing
    states: np.ndarray           # (G, m)
    provenance: str = ""

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.times.ndim != 1 or self.states.shape[0] != self.times.size:
            raise InputError("reference grid/state dimensions are inconsistent")
        if not np.all(np.diff(self.times) > 0):
            raise InputError("reference times must be strictly increasing")


@dataclass
class ErrorReport:
    """Per-state error norms plus run metadata for one benchmark."""

    problem: str
    l2: np.ndarray               # (m,), mean over seeds
    linf: np.ndarray
    mae: np.ndarray
    abs_tol: float
    rel_tol: float
    seed: int
    runs: int
    time_median: float
    time_min: float
    time_max: float
    n_points: int
    self_referenced: bool = False
    failed: bool = False
    t_reached: float | None = None
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        d = {
            "schema_version": self.schema_version,
            "problem": self.problem,
            "abs_tol": self.abs_tol,
            "rel_tol": self.rel_tol,
            "seed": self.seed,
            "runs": self.runs,
            "l2": list(map(float, self.l2)),
            "linf": list(map(float, self.linf)),
            "mae": list(map(float, self.mae)),
            "time_median": self.time_median,
            "time_min": self.time_min,
            "time_max": self.time_max,
            "n_points": self.n_points,
            "self_referenced": self.self_referenced,
            "failed": self.failed,
            "t_reached": self.t_reached,
        }
        return d

    @staticmethod
    def from_dict(d: dict) -> "ErrorReport":
        return ErrorReport(
            problem=d["problem"],
            l2=np.asarray(d["l2"]), linf=np.asarray(d["linf"]), mae=np.asarray(d["mae"]),
            abs_tol=d["abs_tol"], rel_tol=d["rel_tol"], seed=d["seed"], runs=d["runs"],
            time_median=d["time_median"], time_min=d["time_min"], time_max=d["time_max"],
            n_points=d["n_points"], self_referenced=d["self_referenced"],
            failed=d["failed"], t_reached=d["t_reached"],
            schema_version=d["schema_version"],
        )


@dataclass
class SweepResult:
    """Bias-variance scores over a (c, N) grid; failed cells carry NaN scores."""

    problem: str
    c_values: np.ndarray
    n_values: np.ndarray
    scores: np.ndarray           # (len(c), len(N))
    times: np.ndarray
    failed: np.ndarray           # bool mask
    seeds: int
    schema_version: int = SCHEMA_VERSION


def compute_errors(solution: np.ndarray, reference: np.ndarray):
    """Per-state (l2, linf, MAE) of the difference between two same-grid tables."""
    solution = np.asarray(solution, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if solution.shape != reference.shape:
        raise InputError(
            f"grid mismatch: solution {solution.shape} vs reference {reference.shape}"
        )
    d = solution - reference
    if d.ndim == 1:
        d = d[:, None]
    l2 = np.sqrt(np.sum(d * d, axis=0))
    linf = np.max(np.abs(d), axis=0)
    mae = np.mean(np.abs(d), axis=0)
    return l2, linf, mae


def write_solution_csv(path, times: np.ndarray, states: np.ndarray):
    """Grid CSV with header ``t,u1,...,um`` and >= 15 significant digits."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    m = states.shape[1]
    header = "t," + ",".join(f"u{i + 1}" for i in range(m))
    table = np.column_stack([np.asarray(times, dtype=float), states])
    np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.17g")


def read_reference_csv(path, name: str = "", provenance: str | None = None) -> ReferenceTrajectory:
    path = Path(path)
    if not path.exists():
        raise InputError(f"reference file not found: {path}")
    with open(path) as fh:
        header = fh.readline().strip()
    if not header.startswith("t,"):
        raise InputError(f"reference CSV {path} must start with header 't,u1,...'")
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return ReferenceTrajectory(
        name=name or path.stem,
        times=table[:, 0],
        states=table[:, 1:],
        provenance=provenance if provenance is not None else str(path),
    )


def bundled_reference_path(name: str) -> Path:
    """Path of the reference CSV shipped with the package for a problem name."""
    return Path(__file__).parent / "data" / "references" / f"{name}.csv"


def load_bundled_reference(name: str) -> ReferenceTrajectory:
    path = bundled_reference_path(name)
    if not path.exists():
        raise InputError(f"no bundled reference for problem {name!r}")
    return read_reference_csv(path, name=name, provenance=f"bundled:{path.name}")


def _prepare(spec: BenchmarkSpec, t_end: float | None):
    span = (spec.t_span[0], t_end if t_end is not None else spec.t_span[1])
    z0 = spec.z0
    if spec.needs_init:
        z0 = consistent_state(spec.system, span[0], z0)
    return span, z0


def _eval_grid(spec: BenchmarkSpec, span, reference, grid_points, grid_cap=20001):
    if reference is not None:
        t = reference.times
        if t[0] < span[0] - 1e-12 or t[-1] > span[1] * (1 + 1e-12) + 1e-12:
            raise InputError("reference grid extends outside the integration span")
        return t
    count = grid_points or min(spec.reference_grid.count, grid_cap)
    return spec.reference_grid.build(span[0], span[1], count)


def run_benchmark(name: str, cfg: SolverConfig | None = None,
                  reference: ReferenceTrajectory | str | Path | None = None,
                  runs: int = 10, t_end: float | None = None,
                  grid_points: int | None = None,
                  keep_solution: bool = True):
    """Solve a registered benchmark over independent seeds and build an error table.

    With a reference, errors are measured on its grid; without one, a
    tight run at ``tol / 1000`` with the base seed serves as the yardstick and
    the report is marked self-referenced.  Returns ``(report, times, states)``
    where the states are the dense output of the base-seed run (``None`` when
    ``keep_solution`` is false or every run failed).
    """
    cfg = cfg or SolverConfig()
    spec = get_problem(name)
    if isinstance(reference, (str, Path)):
        reference = read_reference_csv(reference, name=name)
    span, z0 = _prepare(spec, t_end)
    grid = _eval_grid(spec, span, reference, grid_points)

    if reference is not None:
        ref_states = reference.states
        if ref_states.shape[1] != spec.system.m:
            raise InputError("reference state count does not match the problem")
        self_ref = False
    else:
        tight = replace(cfg, abs_tol=cfg.abs_tol / 1000.0, rel_tol=cfg.rel_tol / 1000.0)
        traj_ref, _ = solve(spec.system, span, z0, tight)
        ref_states = dense_output(traj_ref, grid)
        self_ref = True

    l2s, linfs, maes, wall, npts = [], [], [], [], []
    base_states = None
    failed, t_reached = False, None
    for r in range(runs):
        run_cfg = replace(cfg, rng_seed=cfg.rng_seed + r)
        tic = time.perf_counter()
        try:
            traj, stats = solve(spec.system, span, z0, run_cfg)
        except SolverFailure as exc:
            failed = True
            t_reached = exc.t_reached
            wall.append(time.perf_counter() - tic)
            continue
        wall.append(time.perf_counter() - tic)
        states = dense_output(traj, grid)
        if r == 0 and keep_solution:
            base_states = states
        l2, linf, mae = compute_errors(states, ref_states)
        l2s.append(l2)
        linfs.append(linf)
        maes.append(mae)
        npts.append(stats.n_points)

    m = spec.system.m
    report = ErrorReport(
        problem=name,
        l2=np.mean(l2s, axis=0) if l2s else np.full(m, np.nan),
        linf=np.mean(linfs, axis=0) if linfs else np.full(m, np.nan),
        mae=np.mean(maes, axis=0) if maes else np.full(m, np.nan),
        abs_tol=cfg.abs_tol, rel_tol=cfg.rel_tol, seed=cfg.rng_seed, runs=runs,
        time_median=float(np.median(wall)), time_min=float(np.min(wall)),
        time_max=float(np.max(wall)),
        n_points=int(np.median(npts)) if npts else 0,
        self_referenced=self_ref, failed=failed, t_reached=t_reached,
    )
    return report, grid, base_states


def sweep_cn(cfg: SolverConfig, c_values, n_values,
             reference: ReferenceTrajectory, problem: str = "vdp",
             seeds: int = 5, grid_points: int | None = None) -> SweepResult:
    """Score squared bias plus seed variance over a (c, N) grid against a reference.

    Cell failures are recorded (NaN score) and the sweep continues.
    """
    c_values = np.asarray(list(c_values), dtype=float)
    n_values = np.asarray(list(n_values), dtype=int)
    if c_values.size == 0 or n_values.size == 0:
        raise InputError("sweep ranges must be non-empty")
    spec = get_problem(problem)
    span, z0 = _prepare(spec, None)
    grid = reference.times
    if grid_points is not None and grid_points < grid.size:
        sel = np.linspace(0, grid.size - 1, grid_points).round().astype(int)
        grid = grid[sel]
        ref_states = reference.states[sel]
    else:
        ref_states = reference.states

    scores = np.full((c_values.size, n_values.size), np.nan)
    times = np.full_like(scores, np.nan)
    failed = np.zeros(scores.shape, dtype=bool)
    for i, c in enumerate(c_values):
        for jn, nk in enumerate(n_values):
            runs = []
            cell_t = []
            ok = True
            for s in range(seeds):
                cell_cfg = replace(cfg, c=float(c), n_kernels=int(nk),
                                   rng_seed=cfg.rng_seed + s)
                tic = time.perf_counter()
                try:
                    traj, _ = solve(spec.system, span, z0, cell_cfg)
                    runs.append(dense_output(traj, grid))
                except SolverFailure:
                    ok = False
                cell_t.append(time.perf_counter() - tic)
            if not ok or not runs:
                failed[i, jn] = True
                times[i, jn] = float(np.median(cell_t))
                continue
            stack = np.stack(runs)                     # (S, G, m)
            mean = stack.mean(axis=0)
            bias2 = (mean - ref_states) ** 2
            var = stack.var(axis=0)
            scores[i, jn] = float(np.sum(bias2 + var))
            times[i, jn] = float(np.median(cell_t))
    return SweepResult(
        problem=problem, c_values=c_values, n_values=n_values,
        scores=scores, times=times, failed=failed, seeds=seeds,
    )


def export_results(obj, path, fmt: str = "csv",
                   times: np.ndarray | None = None,
                   states: np.ndarray | None = None) -> Path:
    """Persist a report or sweep.

    ``csv``: solution grid (report) or cell grid (sweep) at ``path`` plus a
    ``.meta.json`` sidecar with the metadata.  ``json-like``: everything in
    one JSON document at ``path``.
    """
    path = Path(path)
    try:
        if isinstance(obj, ErrorReport):
            if fmt == "csv":
                if times is None or states is None:
                    raise InputError("CSV export of a report needs the solution grid")
                write_solution_csv(path, times, states)
                sidecar = path.with_suffix(path.suffix + ".meta.json")
                sidecar.write_text(json.dumps(obj.to_dict(), indent=2, sort_keys=True))
            else:
                path.write_text(json.dumps(obj.to_dict(), indent=2, sort_keys=True))
            return path
        if isinstance(obj, SweepResult):
            if fmt == "csv":
                with open(path, "w") as fh:
                    fh.write("c,N,score,time_s\n")
                    for i, c in enumerate(obj.c_values):
                        for jn, nk in enumerate(obj.n_values):
                            fh.write(f"{c:.17g},{int(nk)},{obj.scores[i, jn]:.17g},"
                                     f"{obj.times[i, jn]:.17g}\n")
                sidecar = path.with_suffix(path.suffix + ".meta.json")
                meta = {"schema_version": obj.schema_version, "problem": obj.problem,
                        "seeds": obj.seeds,
                        "failed_cells": int(obj.failed.sum())}
                sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True))
            else:
                doc = {"schema_version": obj.schema_version, "problem": obj.problem,
                       "seeds": obj.seeds,
                       "c_values": list(map(float, obj.c_values)),
                       "n_values": list(map(int, obj.n_values)),
                       "scores": obj.scores.tolist(), "times": obj.times.tolist(),
                       "failed": obj.failed.tolist()}
                path.write_text(json.dumps(doc, indent=2, sort_keys=True))
            return path
        raise InputError(f"cannot export object of type {type(obj).__name__}")
    except OSError as exc:
        raise InputError(f"failed to write {path}: {exc}") from exc


def read_report_json(path) -> ErrorReport:
    return ErrorReport.from_dict(json.loads(Path(path).read_text()))
