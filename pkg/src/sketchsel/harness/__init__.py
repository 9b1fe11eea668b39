from .experiments import (
    ExperimentResult,
    contour,
    decay_profile,
    log2_squared_fit,
    minimal_width,
    run_attenuation,
    run_convergence,
    run_experiment,
    run_memory_scaling,
    run_phase_transition,
    run_tradeoff,
)
from .grid import KINDS, ExperimentGrid, GammaSchedule, seed_int, trial_seed
from .kernels import RecoveryRun, recovery_lr, run_recovery, top_indices
from .output import manifest, write_csv, write_result

__all__ = [
    "KINDS",
    "ExperimentGrid",
    "ExperimentResult",
    "GammaSchedule",
    "RecoveryRun",
    "contour",
    "decay_profile",
    "log2_squared_fit",
    "manifest",
    "minimal_width",
    "recovery_lr",
    "run_attenuation",
    "run_convergence",
    "run_experiment",
    "run_memory_scaling",
    "run_phase_transition",
    "run_recovery",
    "run_tradeoff",
    "seed_int",
    "top_indices",
    "trial_seed",
    "write_csv",
    "write_result",
]
