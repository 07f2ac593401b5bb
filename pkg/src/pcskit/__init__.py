"""Pauli-check sandwiching with multi-programmed execution on an emulated
noisy device: check injection, parallel noisy simulation, post-selection,
discard-weighted ensembles, and noise-profile inference."""

from .characterize import (
    CalibrationCurve,
    NoiseEstimate,
    build_calibration_curve,
    estimate_noise_map,
    export_heatmap,
    fit_isotonic,
    wilson_interval,
)
from .checks import (
    CheckPair,
    SandwichedCircuit,
    auto_edge_checks,
    detect_rate_theoretical,
    sandwich,
    synthesize_right_check,
    validate_check_pair,
)
from .circuits import (
    Circuit,
    Gate,
    build_ghz_mirror,
    build_input_prep,
    build_toffoli,
    prepend,
    transpile_to_basis,
    unitary_of,
)
from .config import ExperimentConfig, load_config, validate_config
from .errors import (
    CalibrationError,
    CapacityError,
    ConfigError,
    ExecutionError,
    PcsKitError,
    UnsupportedGateError,
)
from .experiment import RunArtifacts, run_experiment
from .pauli import PauliString, commutes, conjugate_through_clifford, pauli_mul
from .postprocess import (
    EnsembleResult,
    ThreadResult,
    discard_fraction,
    ensemble,
    fidelity,
    filter_counts,
    process_threads,
    scale_counts,
    total_variation,
)
from .qpu import (
    Allocation,
    QpuModel,
    Region,
    allocate_threads,
    thread_capacity,
    make_linear_sweep_qpu,
    run_multiprogram,
)
from .seeding import derive_seed
from .sim import (
    CountsMap,
    NoiseSpec,
    density_matrix_reference,
    exact_distribution,
    run_trajectories,
)

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "CalibrationCurve",
    "CalibrationError",
    "CapacityError",
    "CheckPair",
    "Circuit",
    "ConfigError",
    "CountsMap",
    "EnsembleResult",
    "ExecutionError",
    "ExperimentConfig",
    "Gate",
    "NoiseEstimate",
    "NoiseSpec",
    "PauliString",
    "PcsKitError",
    "QpuModel",
    "Region",
    "RunArtifacts",
    "SandwichedCircuit",
    "ThreadResult",
    "UnsupportedGateError",
    "allocate_threads",
    "auto_edge_checks",
    "build_calibration_curve",
    "build_ghz_mirror",
    "build_input_prep",
    "build_toffoli",
    "commutes",
    "conjugate_through_clifford",
    "density_matrix_reference",
    "derive_seed",
    "detect_rate_theoretical",
    "discard_fraction",
    "ensemble",
    "thread_capacity",
    "estimate_noise_map",
    "exact_distribution",
    "export_heatmap",
    "fidelity",
    "filter_counts",
    "fit_isotonic",
    "load_config",
    "make_linear_sweep_qpu",
    "pauli_mul",
    "prepend",
    "process_threads",
    "run_experiment",
    "run_multiprogram",
    "run_trajectories",
    "sandwich",
    "scale_counts",
    "synthesize_right_check",
    "total_variation",
    "transpile_to_basis",
    "unitary_of",
    "validate_check_pair",
    "wilson_interval",
]
