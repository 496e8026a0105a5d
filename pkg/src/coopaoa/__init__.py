"""Cooperative angle-of-arrival estimation via QUBO/Ising annealing."""

from .array_model import (
    ArrayGeometry,
    RotationShift,
    SteeringGrid,
    aligned_index,
    build_grid,
    rotation_shift,
    steering_vector,
)
from .estimator import (
    ApEstimate,
    L1Config,
    decode_caim,
    estimate_aim,
    estimate_caim,
    estimate_l1,
    lasso_ista,
)
from .eval_harness import (
    ExperimentSpec,
    MetricsReport,
    circular_error_deg,
    parameter_sweep,
    run_experiment,
    write_report,
)
from .ising_solver import (
    AnnealConfig,
    SolveResult,
    anneal,
    brute_force,
    local_fields,
    temperature_schedule,
)
from .qubo_builder import (
    IndexMap,
    QuboProblem,
    build_alignment_pairs,
    build_qubo,
    objective_value,
    pair_shifts,
    penalty_g,
    qubo_energy,
)
from .scene_sim import (
    ApConfig,
    Scene,
    Snapshot,
    ground_truth_alignment,
    load_snapshots,
    save_snapshots,
    synthesize,
)

__version__ = "0.1.0"

__all__ = [
    "ApConfig",
    "ApEstimate",
    "AnnealConfig",
    "ArrayGeometry",
    "ExperimentSpec",
    "IndexMap",
    "L1Config",
    "MetricsReport",
    "QuboProblem",
    "RotationShift",
    "Scene",
    "Snapshot",
    "SolveResult",
    "SteeringGrid",
    "aligned_index",
    "anneal",
    "brute_force",
    "build_alignment_pairs",
    "build_grid",
    "build_qubo",
    "circular_error_deg",
    "decode_caim",
    "estimate_aim",
    "estimate_caim",
    "estimate_l1",
    "ground_truth_alignment",
    "lasso_ista",
    "load_snapshots",
    "local_fields",
    "objective_value",
    "pair_shifts",
    "parameter_sweep",
    "penalty_g",
    "qubo_energy",
    "rotation_shift",
    "run_experiment",
    "save_snapshots",
    "steering_vector",
    "synthesize",
    "temperature_schedule",
    "write_report",
]
