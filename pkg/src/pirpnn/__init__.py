"""Random-projection collocation solver for stiff ODEs and index-1 DAEs."""

from .basis import BasisConfig, RandomBasis, build_basis, expected_kernel_stats
from .dae_init import ConsistencyProblem, consistent_state, constraint_residual, make_consistent
from .errors import (
    DivergenceError,
    InitializationError,
    InputError,
    PirpnnError,
    SolverFailure,
    StallError,
)
from .harness import (
    ErrorReport,
    ReferenceTrajectory,
    SweepResult,
    compute_errors,
    load_bundled_reference,
    run_benchmark,
    sweep_cn,
)
from .problems import REGISTRY, BenchmarkSpec, get_problem
from .residual import CollocationGrid, IvpSystem, MassMatrix, make_grid
from .solver import PirpnnSolver
from .stepper import SolveStats, SolverConfig, StepReport, solve
from .trial import Trajectory, TrialSolution, dense_output

__version__ = "0.1.0"

__all__ = [
    "BasisConfig", "RandomBasis", "build_basis", "expected_kernel_stats",
    "ConsistencyProblem", "consistent_state", "constraint_residual", "make_consistent",
    "PirpnnError", "InputError", "SolverFailure", "StallError", "DivergenceError",
    "InitializationError",
    "ErrorReport", "ReferenceTrajectory", "SweepResult", "compute_errors",
    "load_bundled_reference", "run_benchmark", "sweep_cn",
    "REGISTRY", "BenchmarkSpec", "get_problem",
    "CollocationGrid", "IvpSystem", "MassMatrix", "make_grid",
    "PirpnnSolver",
    "SolverConfig", "SolveStats", "StepReport", "solve",
    "Trajectory", "TrialSolution", "dense_output",
]
