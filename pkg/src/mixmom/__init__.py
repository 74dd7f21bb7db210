"""Learning mixed membership models from moment tensors.

Third-order moment estimators are factorized by multiplicative nonnegative
quadratic-programming updates on partitions of the variables; the
partition-wise estimates are aligned through shared anchor variables.
"""

from ._accel import backend, set_backend
from .exceptions import (
    ArgumentError,
    MixmomError,
    ParseError,
    PlanError,
    SolverError,
    StitchError,
    UnsupportedError,
    ValidationError,
)
from .matching import (
    BoundCheck,
    MatchReport,
    apply_permutation,
    brute_force_match,
    check_procrustes_bound,
    check_sam_bound,
    invert_permutation,
    match_objective,
    match_procrustes,
    match_smallest_angle,
)
from .moments import (
    Dataset,
    ModelParams,
    block_tensor,
    dirichlet_moments,
    empirical_pair,
    empirical_triple,
    negative_fraction,
    population_block_tensor,
    population_pair,
    population_triple_cp,
    population_triple_via_moments,
)
from .partition import (
    FitResult,
    PartitionPlan,
    build_partition_plan,
    fit_partitioned,
    stitch,
)
from .pqp import (
    FactorizeOptions,
    FactorizeResult,
    QuadProgram,
    factorize,
    pqp_matches_wnmf,
    pqp_step,
    solve_nqp,
    tensor_objective,
    wnmf_step,
)
from .simulate import SimConfig, contaminate, rmse_aligned, sample_model, simulate_dataset
from .tensor import KruskalFactors, fold, khatri_rao, kruskal_to_dense, unfold

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "BoundCheck",
    "Dataset",
    "FactorizeOptions",
    "FactorizeResult",
    "FitResult",
    "KruskalFactors",
    "MatchReport",
    "MixmomError",
    "ModelParams",
    "ParseError",
    "PartitionPlan",
    "PlanError",
    "QuadProgram",
    "SimConfig",
    "SolverError",
    "StitchError",
    "UnsupportedError",
    "ValidationError",
    "apply_permutation",
    "backend",
    "block_tensor",
    "brute_force_match",
    "build_partition_plan",
    "check_procrustes_bound",
    "check_sam_bound",
    "contaminate",
    "dirichlet_moments",
    "empirical_pair",
    "empirical_triple",
    "factorize",
    "fit_partitioned",
    "fold",
    "invert_permutation",
    "khatri_rao",
    "kruskal_to_dense",
    "match_objective",
    "match_procrustes",
    "match_smallest_angle",
    "negative_fraction",
    "population_block_tensor",
    "population_pair",
    "population_triple_cp",
    "population_triple_via_moments",
    "pqp_matches_wnmf",
    "pqp_step",
    "rmse_aligned",
    "sample_model",
    "set_backend",
    "simulate_dataset",
    "solve_nqp",
    "stitch",
    "tensor_objective",
    "unfold",
    "wnmf_step",
]
