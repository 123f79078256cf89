"""Numerics for operator-relative fusion frame systems.

The package builds weighted subspace systems with local operators on finite
dimensional real or complex Hilbert spaces, verifies the two-sided frame
inequality relative to a target operator k, computes optimal bounds through
a range-inclusion factorization, constructs and certifies dual systems, and
checks the subset identity and perturbation theorems numerically.
"""
from .numerics import (
    DEFAULT_TOL,
    InputError,
    InternalConsistencyError,
    NotAFrameError,
    PreconditionError,
    ToleranceProfile,
    douglas_factor,
)
from .model import (
    BoundedOperator,
    FixtureBundle,
    GFusionSystem,
    HilbertSpace,
    LocalOperator,
    WeightedSubspace,
    check_projection_commutation,
    embed_k_frame,
    fixture,
    projection,
)
from .frame_ops import (
    FrameBounds,
    FrameReport,
    cross_frame_check,
    frame_operator,
    optimal_bounds,
    reconstruction_check,
    restricted_inverse,
    synthesis,
    verify_k_g_fusion,
)
from .transforms import reduce_operator, transform_invertible, transform_unitary
from .duality import (
    DualConstructionError,
    KGFDualPair,
    QDualPair,
    canonical_dual,
    check_dual_subset_identity,
    check_parseval_subset_identity,
    check_three_quarters_bound,
    complement_residual,
    construct_q_dual,
    parsevalize,
    partial_operator,
    qdual_bound_corollary,
    verify_kgf_dual,
    verify_q_dual,
)
from .perturbation import (
    HypothesisVerdict,
    PerturbationMode,
    PerturbationParams,
    paley_wiener_check,
    perturb_hypothesis,
    predicted_bounds,
    variant_gamma_readings,
    verify_perturbation_theorem,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TOL",
    "InputError",
    "InternalConsistencyError",
    "NotAFrameError",
    "PreconditionError",
    "ToleranceProfile",
    "douglas_factor",
    "BoundedOperator",
    "FixtureBundle",
    "GFusionSystem",
    "HilbertSpace",
    "LocalOperator",
    "WeightedSubspace",
    "check_projection_commutation",
    "embed_k_frame",
    "fixture",
    "projection",
    "FrameBounds",
    "FrameReport",
    "cross_frame_check",
    "frame_operator",
    "optimal_bounds",
    "reconstruction_check",
    "restricted_inverse",
    "synthesis",
    "verify_k_g_fusion",
    "reduce_operator",
    "transform_invertible",
    "transform_unitary",
    "DualConstructionError",
    "KGFDualPair",
    "QDualPair",
    "canonical_dual",
    "check_dual_subset_identity",
    "check_parseval_subset_identity",
    "check_three_quarters_bound",
    "complement_residual",
    "construct_q_dual",
    "parsevalize",
    "partial_operator",
    "qdual_bound_corollary",
    "verify_kgf_dual",
    "verify_q_dual",
    "HypothesisVerdict",
    "PerturbationMode",
    "PerturbationParams",
    "paley_wiener_check",
    "perturb_hypothesis",
    "predicted_bounds",
    "variant_gamma_readings",
    "verify_perturbation_theorem",
    "__version__",
]
