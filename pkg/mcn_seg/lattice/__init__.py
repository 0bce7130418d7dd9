"""Permutohedral lattice filtering and its brute-force reference."""

from mcn_seg.lattice.features import bilateral_features
from mcn_seg.lattice.filters import (
    BoundFilter,
    ExactFilter,
    LatticeFilter,
    PairwiseFilter,
)
from mcn_seg.lattice.permutohedral import (
    FeaturePoints,
    PermutohedralLattice,
    gaussian_filter_bruteforce,
    gaussian_kernel_matrix,
    lattice_build,
    lattice_filter,
    operator_asymmetry,
    operator_matrix,
    relative_l2,
)

__all__ = [
    "BoundFilter",
    "ExactFilter",
    "FeaturePoints",
    "LatticeFilter",
    "PairwiseFilter",
    "PermutohedralLattice",
    "bilateral_features",
    "gaussian_filter_bruteforce",
    "gaussian_kernel_matrix",
    "lattice_build",
    "lattice_filter",
    "operator_asymmetry",
    "operator_matrix",
    "relative_l2",
]
