"""Sparse dictionary learning with a jointly trained linear encoder.

Learns a synthesis dictionary D and a dual analysis operator C by block
coordinate descent on a single energy, so that sparse codes can later be
approximated by the single matrix product C X instead of iterative coding.
"""

from .datasets import (
    PatchSpec,
    SyntheticData,
    SyntheticSpec,
    extract_patches,
    gen_low_rank,
    gen_tight_frame,
    normalize,
)
from .errors import ContractError, DivergenceError, FormatError
from .metrics import (
    MatchReport,
    dual_distance,
    largest_principal_angle,
    match_atoms,
    pca_basis,
    support_stats,
)
from .model import (
    EnergyBreakdown,
    HyperParams,
    Model,
    decode,
    encode_linear,
    energy,
)
from .solvers import (
    FistaState,
    SolveReport,
    StepSizes,
    eigen_range,
    fista_solve,
    grad_codes,
    grad_dictionary,
    grad_dual,
    ista_solve,
    ista_step,
    project_ball,
    project_columns,
    project_rows,
    soft_threshold,
    solve_codes,
    solve_dictionary,
    solve_dual,
    step_sizes,
)
from .trainer import (
    InitStrategy,
    TraceRecord,
    TrainingDiverged,
    TrainTrace,
    initialize,
    replace_underused_atoms,
    should_stop,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "ContractError",
    "DivergenceError",
    "EnergyBreakdown",
    "FistaState",
    "FormatError",
    "HyperParams",
    "InitStrategy",
    "MatchReport",
    "Model",
    "PatchSpec",
    "SolveReport",
    "StepSizes",
    "SyntheticData",
    "SyntheticSpec",
    "TraceRecord",
    "TrainTrace",
    "TrainingDiverged",
    "decode",
    "dual_distance",
    "eigen_range",
    "encode_linear",
    "energy",
    "extract_patches",
    "fista_solve",
    "gen_low_rank",
    "gen_tight_frame",
    "grad_codes",
    "grad_dictionary",
    "grad_dual",
    "initialize",
    "ista_solve",
    "ista_step",
    "largest_principal_angle",
    "match_atoms",
    "normalize",
    "pca_basis",
    "project_ball",
    "project_columns",
    "project_rows",
    "replace_underused_atoms",
    "should_stop",
    "soft_threshold",
    "solve_codes",
    "solve_dictionary",
    "solve_dual",
    "step_sizes",
    "support_stats",
    "train",
    "__version__",
]
