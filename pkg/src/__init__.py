# SPARSEADD - sparse additive decomposition by orthogonal change of variables
# Core package initialization

from .errors import (
    BudgetExceededError,
    ConvergenceError,
    InvalidInputError,
    SparsifyError,
    StageError,
)
from .models import PipelineConfig
from .sparsify import PipelineResult, run_pipeline, sample_function

__all__ = [
    # Errors
    "SparsifyError",
    "InvalidInputError",
    "BudgetExceededError",
    "StageError",
    "ConvergenceError",
    # Pipeline
    "PipelineConfig",
    "PipelineResult",
    "run_pipeline",
    "sample_function",
]

__version__ = "1.0.0"
