"""Olfaction-style molecule-mixture communication: channel simulation and sparse recovery."""

from .affinity import (
    AffinityMatrix,
    construct_affinity,
    fixture_affinity_matrix,
    generate_raw_column,
    load_affinity,
    mutual_coherence,
    rescale_column,
    save_affinity,
)
from .channel import (
    ArrayObservation,
    MoleculeCounts,
    activation_fn,
    propagate,
    receive,
    release,
    sample_poisson,
    simulate_snapshot,
)
from .config import (
    RngStream,
    SystemConfig,
    derive_stream,
    load_system_config,
    validate_config,
)
from .detection import DetectionResult, ErrorEstimate, peak_detect, run_trials
from .mixtures import (
    MixtureMatrix,
    build_mixture_matrix,
    load_mixture_matrix,
    one_hot_signal,
    save_mixture_matrix,
)
from .recovery import (
    ConicProgram,
    RecoverySolution,
    SolveStatus,
    build_op1,
    build_op2,
    constraint_residuals,
    dump_program,
    op0_oracle,
    recover_op2,
    solve,
)
from .sweep import (
    GeneratedAlphabet,
    SweepPoint,
    SweepResult,
    SweepSpec,
    emit_csv,
    emit_plot,
    plot_curves,
    read_csv,
    sweep,
)

__all__ = [
    "AffinityMatrix",
    "ArrayObservation",
    "ConicProgram",
    "DetectionResult",
    "ErrorEstimate",
    "GeneratedAlphabet",
    "MixtureMatrix",
    "MoleculeCounts",
    "RecoverySolution",
    "RngStream",
    "SolveStatus",
    "SweepPoint",
    "SweepResult",
    "SweepSpec",
    "SystemConfig",
    "activation_fn",
    "build_mixture_matrix",
    "build_op1",
    "build_op2",
    "constraint_residuals",
    "construct_affinity",
    "derive_stream",
    "dump_program",
    "emit_csv",
    "emit_plot",
    "fixture_affinity_matrix",
    "generate_raw_column",
    "load_affinity",
    "load_mixture_matrix",
    "load_system_config",
    "mutual_coherence",
    "one_hot_signal",
    "op0_oracle",
    "peak_detect",
    "plot_curves",
    "propagate",
    "read_csv",
    "receive",
    "recover_op2",
    "release",
    "rescale_column",
    "run_trials",
    "sample_poisson",
    "save_affinity",
    "save_mixture_matrix",
    "simulate_snapshot",
    "solve",
    "sweep",
    "validate_config",
]

__version__ = "0.1.0"
