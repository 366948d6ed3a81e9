# Core module
# Sparsity patterns, sampled functions and additive decompositions

from .graphs import (
    BlockStructure,
    Comparison,
    SparsityPattern,
    component_patterns,
    connected_components,
    maximal_cliques,
    pattern_from_matrix_set,
    profile_preceq,
)
from .functions import Box, SampledFunction, check_derivatives, sample_ball
from .matrix_set import as_matrix_set, conjugate, mean_abs, symmetrize

__all__ = [
    "BlockStructure",
    "Comparison",
    "SparsityPattern",
    "component_patterns",
    "connected_components",
    "maximal_cliques",
    "pattern_from_matrix_set",
    "profile_preceq",
    "Box",
    "SampledFunction",
    "check_derivatives",
    "sample_ball",
    "as_matrix_set",
    "conjugate",
    "mean_abs",
    "symmetrize",
]
