# Pydantic models for SPARSEADD
# Configuration schemas and report layouts shared by library and CLI

import hashlib
import json
import math
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

import config


class Normalization(str, Enum):
    """How the smoothed loss averages over the matrix set"""

    MEAN_OVER_N = "mean_over_N"
    INV_SQRT_COUNT = "inv_sqrt_count"


class OptimizerMethod(str, Enum):
    """Manifold optimizer"""

    RGD = "rgd"
    LANDING = "landing"


class GridSelector(str, Enum):
    """Loss used to pick the best grid point"""

    L_HALF_TWO = "l_half_two"
    L_EPS = "l_eps"


class InitMethod(str, Enum):
    """Initialization of the per-block optimizer"""

    GRID = "grid"
    RANDOM = "random"
    IDENTITY = "identity"


class QuadratureKind(str, Enum):
    """Integration rule for ANOVA projections"""

    MONTE_CARLO = "monte_carlo"
    TENSOR_GAUSS = "tensor_gauss"


class SpanCompression(str, Enum):
    """Replacement of a matrix set by a basis of its span"""

    NONE = "none"
    ORTHONORMAL = "orthonormal"
    SCALED = "scaled"


# ==================== Optimization Models ====================


class LossConfig(BaseModel):
    """Smoothed sparsity loss settings"""

    epsilon: float = Field(config.LOSS_EPSILON, gt=0, description="Smoothing epsilon")
    include_diagonal: bool = Field(
        False, description="Count diagonal entries as well as off-diagonal ones"
    )
    normalization: Normalization = Field(
        Normalization.MEAN_OVER_N, description="Averaging convention"
    )

    @classmethod
    def matrix_experiment(cls, epsilon: float = config.LOSS_EPSILON) -> "LossConfig":
        """Diagonal-inclusive, 1/sqrt(|H|)-normalized variant used for matrix sets."""
        return cls(
            epsilon=epsilon,
            include_diagonal=True,
            normalization=Normalization.INV_SQRT_COUNT,
        )


class OptimizerConfig(BaseModel):
    """Riemannian gradient descent / Landing settings"""

    method: OptimizerMethod = Field(OptimizerMethod.RGD)
    step: float = Field(config.STEP_SIZE, gt=0, description="Step size nu")
    landing_penalty: float = Field(config.LANDING_PENALTY, gt=0, description="Lambda")
    max_iters: int = Field(config.MAX_ITERS, ge=0)
    grad_tol: float = Field(config.GRAD_TOL, ge=0)
    defect_tol: float = Field(config.LANDING_DEFECT_TOL, ge=0)
    backtracking: bool = Field(True, description="Armijo backtracking for RGD")
    seed: int = Field(config.DEFAULT_SEED)


class GridConfig(BaseModel):
    """Jacobi-angle lattice search settings"""

    h: float = Field(0.25, gt=0, le=1, description="Lattice step")
    block_size: int = Field(config.GRID_BLOCK_SIZE, gt=0)
    selector: GridSelector = Field(GridSelector.L_HALF_TWO)
    max_points: int = Field(config.GRID_MAX_POINTS, gt=0)
    jobs: int = Field(1, ge=1, description="Worker threads over disjoint chunks")
    large_block_dim: int = Field(
        config.GRID_LARGE_BLOCK_DIM, ge=2, description="Blocks of this size or larger use large_block_h"
    )
    large_block_h: float = Field(config.GRID_LARGE_BLOCK_H, gt=0, le=1)

    def step_for(self, d: int) -> float:
        """Lattice step used for a block of dimension d."""
        return max(self.h, self.large_block_h) if d >= self.large_block_dim else self.h


# ==================== Decomposition Models ====================


class QuadratureSpec(BaseModel):
    """Integration rule for projections onto variable subsets"""

    kind: QuadratureKind = Field(QuadratureKind.MONTE_CARLO)
    samples_or_nodes: int = Field(config.MC_SAMPLES, gt=0)
    seed: int = Field(config.DEFAULT_SEED)

    @classmethod
    def gauss(cls, nodes: int = config.GAUSS_NODES) -> "QuadratureSpec":
        return cls(kind=QuadratureKind.TENSOR_GAUSS, samples_or_nodes=nodes)


class AnchorConfig(BaseModel):
    """Anchor point of the anchored decomposition"""

    c: List[float] = Field(..., min_length=1)


# ==================== Generator Models ====================


class MatrixInstanceSpec(BaseModel):
    """Jointly sparsifiable matrix set H_R(J) (0-based index pairs)"""

    d: int = Field(..., ge=1)
    off_diag: List[Tuple[int, int]] = Field(default_factory=list)
    diag: List[int] = Field(default_factory=list)
    N: int = Field(10, ge=1)
    rotation_seed: int = Field(0)
    entry_seed: int = Field(1)
    sigma: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def _check_indices(self) -> "MatrixInstanceSpec":
        for i, j in self.off_diag:
            if i == j or not (0 <= i < self.d and 0 <= j < self.d):
                raise ValueError(f"Invalid off-diagonal pair ({i}, {j}) for d={self.d}")
        for i in self.diag:
            if not 0 <= i < self.d:
                raise ValueError(f"Invalid diagonal index {i} for d={self.d}")
        return self


class ProductTerm(BaseModel):
    """Summand c * g1(x_i) * g2(x_j) of a separable test function (0-based i, j)"""

    i: int = Field(..., ge=0)
    j: int = Field(..., ge=0)
    c: float
    g1: Dict[str, Any]
    g2: Dict[str, Any]


class FunctionSpec(BaseModel):
    """Structured description of a random sparse additive test function"""

    d: int = Field(..., ge=2)
    components: List[List[int]]
    terms: List[ProductTerm]
    rotation_seed: Optional[int] = Field(None, description="Haar rotation seed, None for no rotation")
    noisy: bool = False
    radius: float = Field(1.0, gt=0)
    seed: int = Field(config.DEFAULT_SEED)


# ==================== Pipeline Models ====================


class PipelineConfig(BaseModel):
    """End-to-end sparsifying configuration"""

    tau_rel: float = Field(config.VERTEX_TAU_REL, gt=0, description="Vertex SVD threshold")
    delta: float = Field(config.BLOCKDIAG_DELTA, gt=0, description="Commutant tolerance")
    gap: float = Field(config.BLOCKDIAG_GAP, gt=0, description="Eigen-gap factor gamma")
    span_tau_rel: float = Field(config.SPAN_TAU_REL, ge=0)
    compression: SpanCompression = Field(SpanCompression.ORTHONORMAL)
    loss: LossConfig = Field(default_factory=LossConfig.matrix_experiment)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    init: InitMethod = Field(InitMethod.GRID)
    grid: GridConfig = Field(default_factory=GridConfig)
    random_candidates: int = Field(config.RANDOM_INIT_CANDIDATES, ge=1)
    random_iters: int = Field(config.RANDOM_INIT_ITERS, ge=0)
    etas: List[float] = Field(default_factory=lambda: list(config.DEFAULT_ETAS))
    seed: int = Field(config.DEFAULT_SEED)
    jobs: int = Field(1, ge=1, description="Parallel blocks")
    polish: bool = Field(True, description="Refit on the identified support after optimizing")

    @field_validator("etas")
    @classmethod
    def _etas_nonnegative(cls, value: List[float]) -> List[float]:
        if not value or any(eta < 0 or not math.isfinite(eta) for eta in value):
            raise ValueError("etas must be a nonempty list of nonnegative thresholds")
        return sorted(value)

    def adapted_to_noise(self, noisy: bool) -> "PipelineConfig":
        """
        Loosen the numerical tolerances for noisy data.

        Only fields that were not set explicitly are changed.
        """
        if not noisy:
            return self
        update = {}
        for name, value in (
            ("tau_rel", config.NOISY_VERTEX_TAU_REL),
            ("delta", config.NOISY_BLOCKDIAG_DELTA),
            ("span_tau_rel", config.NOISY_SPAN_TAU_REL),
        ):
            if name not in self.model_fields_set:
                update[name] = value
        return self.model_copy(update=update)

    def config_hash(self) -> str:
        """Stable sha256 of the canonical JSON form."""
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


# ==================== Report Models ====================


class RunManifest(BaseModel):
    """Provenance record embedded in every output file"""

    command: str
    config_hash: str
    seeds: Dict[str, int] = Field(default_factory=dict)
    inputs: List[str] = Field(default_factory=list)
    outputs: List[str] = Field(default_factory=list)
    timings: Dict[str, float] = Field(default_factory=dict)


class BlockReport(BaseModel):
    """Per-block optimizer summary"""

    size: int
    init: str
    final_loss: float
    iters: int


class PipelineReport(BaseModel):
    """JSON report written by `sparsify`"""

    config: Dict[str, Any]
    d: int
    d1: int
    profile: List[int]
    per_block: List[BlockReport]
    patterns_by_eta: Dict[str, Dict[str, Any]]
    chi_by_eta: Optional[Dict[str, int]] = None
    optimality_gap: Optional[float] = None
    counting_convention: str = (
        "chi counts ordered off-diagonal pairs plus diagonal support"
    )
    U_total: List[List[float]]
    seed: int
    manifest: Optional[RunManifest] = None
