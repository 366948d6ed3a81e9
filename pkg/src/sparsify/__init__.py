# Sparsifying Package for SPARSEADD
# Vertex minimization, block diagonalization and the end-to-end pipeline

from .vertex_min import GradientSample, VertexReduction, vertex_minimize, reduce_hessians
from .block_diag import (
    BlockDiagResult,
    CommutantSpectrum,
    blocks_equivalent,
    commutant_operator,
    error_controlled_blockdiag,
    extract_blocks,
    reconstruction_error,
)
from .metrics import (
    GroundTruth,
    block_loss_sum,
    chi_histogram,
    failure_ratio,
    optimality_gap,
    sparsity_gap,
)
from .pipeline import (
    BlockOutcome,
    FunctionSamples,
    PipelineResult,
    compose_transform,
    optimize_block,
    run_pipeline,
    sample_function,
)
from .trials import (
    TrialResult,
    protocol_specs,
    run_trial,
    run_trials,
    summarize_rows,
    summarize_trials,
)

__all__ = [
    "GradientSample",
    "VertexReduction",
    "vertex_minimize",
    "reduce_hessians",
    "BlockDiagResult",
    "CommutantSpectrum",
    "blocks_equivalent",
    "commutant_operator",
    "error_controlled_blockdiag",
    "extract_blocks",
    "reconstruction_error",
    "GroundTruth",
    "block_loss_sum",
    "chi_histogram",
    "failure_ratio",
    "optimality_gap",
    "sparsity_gap",
    "BlockOutcome",
    "FunctionSamples",
    "PipelineResult",
    "compose_transform",
    "optimize_block",
    "run_pipeline",
    "sample_function",
    "TrialResult",
    "protocol_specs",
    "run_trial",
    "run_trials",
    "summarize_rows",
    "summarize_trials",
]
