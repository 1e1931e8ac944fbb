"""Command line interface: solve benchmarks, run the (c, N) sweep, list problems.

Exit codes: 0 success, 2 solver failure, 3 input error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .errors import InputError, PirpnnError, SolverFailure
from .harness import (
    export_results,
    read_reference_csv,
    run_benchmark,
    sweep_cn,
)
from .problems import REGISTRY, get_problem
from .stepper import SolverConfig

EXIT_OK = 0
EXIT_SOLVER = 2
EXIT_INPUT = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad arguments; 2 is reserved for solver failures.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pirpnn", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve a benchmark and report errors")
    ps.add_argument("--problem", required=True)
    ps.add_argument("--tol", type=float, default=1e-6,
                    help="sets both tolerances unless overridden")
    ps.add_argument("--abstol", type=float, default=None)
    ps.add_argument("--reltol", type=float, default=None)
    ps.add_argument("--t-end", type=float, default=None)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--runs", type=int, default=10)
    ps.add_argument("--reference", default=None)
    ps.add_argument("--out", default=None)
    ps.add_argument("--format", choices=["csv", "json-like"], default="csv")
    ps.add_argument("--sparse", choices=["auto", "on", "off"], default="auto")
    ps.add_argument("--grid-points", type=int, default=None)

    pw = sub.add_parser("sweep", help="bias-variance sweep over (c, N)")
    pw.add_argument("--problem", default="vdp")
    pw.add_argument("--c-min", type=float, required=True)
    pw.add_argument("--c-max", type=float, required=True)
    pw.add_argument("--c-steps", type=int, required=True)
    pw.add_argument("--n-min", type=int, required=True)
    pw.add_argument("--n-max", type=int, required=True)
    pw.add_argument("--n-steps", type=int, required=True)
    pw.add_argument("--reference", required=True)
    pw.add_argument("--out", required=True)
    pw.add_argument("--tol", type=float, default=1e-6)
    pw.add_argument("--seed", type=int, default=0)
    pw.add_argument("--seeds", type=int, default=5)
    pw.add_argument("--grid-points", type=int, default=None)

    sub.add_parser("list-problems", help="list registered benchmarks")
    return p


def _solve_cmd(args) -> int:
    cfg = SolverConfig(
        abs_tol=args.abstol if args.abstol is not None else args.tol,
        rel_tol=args.reltol if args.reltol is not None else args.tol,
        rng_seed=args.seed,
        sparse=args.sparse,
    )
    report, times, states = run_benchmark(
        args.problem, cfg, reference=args.reference, runs=args.runs,
        t_end=args.t_end, grid_points=args.grid_points,
    )
    label = "self-referenced" if report.self_referenced else "vs reference"
    print(f"problem={report.problem} tol=({report.abs_tol:g},{report.rel_tol:g}) "
          f"runs={report.runs} points={report.n_points} {label}")
    for i in range(report.mae.size):
        print(f"  u{i + 1}: l2={report.l2[i]:.3e}  linf={report.linf[i]:.3e}  "
              f"mae={report.mae[i]:.3e}")
    print(f"  time[s]: median={report.time_median:.3e} "
          f"min={report.time_min:.3e} max={report.time_max:.3e}")
    if args.out:
        export_results(report, args.out, fmt=args.format, times=times, states=states)
        print(f"  wrote {args.out}")
    if report.failed:
        print(f"solver failure: reached t = {report.t_reached}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _sweep_cmd(args) -> int:
    ref = read_reference_csv(args.reference, name=args.problem)
    cfg = SolverConfig(abs_tol=args.tol, rel_tol=args.tol, rng_seed=args.seed)
    result = sweep_cn(
        cfg,
        np.linspace(args.c_min, args.c_max, args.c_steps),
        np.linspace(args.n_min, args.n_max, args.n_steps).round().astype(int),
        ref,
        problem=args.problem,
        seeds=args.seeds,
        grid_points=args.grid_points,
    )
    export_results(result, args.out, fmt="csv")
    ok = ~result.failed
    if ok.any():
        best = np.nanmin(result.scores[ok])
        print(f"sweep {args.problem}: {ok.sum()}/{result.failed.size} cells ok, "
              f"best score {best:.3e}; wrote {args.out}")
    else:
        print("sweep: all cells failed", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _list_cmd(_args) -> int:
    for name in sorted(REGISTRY):
        spec = get_problem(name)
        print(f"{name:14s} m={spec.system.m:<4d} span={spec.t_span}  {spec.description}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return _solve_cmd(args)
        if args.command == "sweep":
            return _sweep_cmd(args)
        return _list_cmd(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except PirpnnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    raise SystemExit(main())
