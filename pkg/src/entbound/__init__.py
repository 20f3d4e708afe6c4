"""Entanglement lower bounds from entropic uncertainty relations."""

from .bounds import (
    BoundReport,
    ConservedQuantity,
    assemble_bound,
    basis_bounds,
    number_decomposition,
    povm_bounds,
    project_conserved,
    q_c,
    q_ct,
    q_fl,
    q_fsd,
    q_fsdp,
    q_mu,
    q_pn,
    witness_povm,
)
from .entropy import (
    JointDistribution,
    conditional_classical,
    conditional_quantum,
    mutual_information,
    relative_classical,
    relative_entropy,
    shannon,
    von_neumann,
)
from .measurement import (
    Measurement,
    isometry_extend,
    is_quantum_classical,
    joint_distribution,
    overlap_matrix,
    post_measure,
    povm_overlap_h,
    residual_conditional,
)
from .qmath import (
    DensityOperator,
    PureStateVector,
    SchmidtDecomposition,
    partial_trace,
    purify,
    schmidt,
    spectral_function,
    tensor_product,
)

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "ConservedQuantity",
    "DensityOperator",
    "JointDistribution",
    "Measurement",
    "PureStateVector",
    "SchmidtDecomposition",
    "assemble_bound",
    "basis_bounds",
    "conditional_classical",
    "conditional_quantum",
    "is_quantum_classical",
    "isometry_extend",
    "joint_distribution",
    "mutual_information",
    "number_decomposition",
    "overlap_matrix",
    "partial_trace",
    "post_measure",
    "povm_bounds",
    "povm_overlap_h",
    "project_conserved",
    "purify",
    "q_c",
    "q_ct",
    "q_fl",
    "q_fsd",
    "q_fsdp",
    "q_mu",
    "q_pn",
    "relative_classical",
    "relative_entropy",
    "residual_conditional",
    "schmidt",
    "shannon",
    "spectral_function",
    "tensor_product",
    "von_neumann",
    "witness_povm",
]
