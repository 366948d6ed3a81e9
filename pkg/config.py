# SPARSEADD Configuration Module
# Default settings for the sparsifying pipeline; every value can be
# overridden through a SPARSEADD_* environment variable.

import os
from typing import Optional


def _as_float(value: Optional[str], default: float) -> float:
    """Parse a float environment variable, falling back to the default."""
    if value is None:
        return default
    try:
        return float(value)
    except (TypeError, ValueError):
        return default


def _as_int(value: Optional[str], default: int) -> int:
    """Parse an integer environment variable, falling back to the default."""
    if value is None:
        return default
    try:
        return int(float(value))
    except (TypeError, ValueError):
        return default


def _as_bool(value: Optional[str], default: bool = False) -> bool:
    """Parse a boolean-like environment variable value."""
    if value is None:
        return default
    return value.strip().lower() in {"1", "true", "yes", "on"}


def _env(name: str) -> Optional[str]:
    return os.getenv(f"SPARSEADD_{name}")


# Directory where instances, reports and trajectories are written
STORAGE_PATH = _env("STORAGE_PATH") or "data/sparseadd"

# Optional: Set to True to enable debug logging
DEBUG = _as_bool(_env("DEBUG"), default=False)

# Master seed used when a command is given none
DEFAULT_SEED = _as_int(_env("SEED"), 0)

# Smoothed l0 loss
LOSS_EPSILON = _as_float(_env("LOSS_EPSILON"), 1e-8)

# Optimizer defaults (step size, landing penalty, stopping rules)
STEP_SIZE = _as_float(_env("STEP_SIZE"), 1e-2)
LANDING_PENALTY = _as_float(_env("LANDING_PENALTY"), 1.0)
MAX_ITERS = _as_int(_env("MAX_ITERS"), 20000)
GRAD_TOL = _as_float(_env("GRAD_TOL"), 1e-8)
LANDING_DEFECT_TOL = _as_float(_env("LANDING_DEFECT_TOL"), 1e-6)
RANDOM_INIT_CANDIDATES = _as_int(_env("RANDOM_INIT_CANDIDATES"), 5)
RANDOM_INIT_ITERS = _as_int(_env("RANDOM_INIT_ITERS"), 5000)

# Grid search: largest |Theta(h)| we agree to enumerate, and chunk size
GRID_MAX_POINTS = _as_int(_env("GRID_MAX_POINTS"), 60_000_000)
GRID_BLOCK_SIZE = _as_int(_env("GRID_BLOCK_SIZE"), 32768)
GRID_LARGE_BLOCK_DIM = _as_int(_env("GRID_LARGE_BLOCK_DIM"), 5)
GRID_LARGE_BLOCK_H = _as_float(_env("GRID_LARGE_BLOCK_H"), 1.0)

# Vertex minimization: relative singular value threshold
VERTEX_TAU_REL = _as_float(_env("VERTEX_TAU_REL"), 1e-8)

# Block diagonalization: commutant tolerance, eigen-gap factor, operator cap
BLOCKDIAG_DELTA = _as_float(_env("BLOCKDIAG_DELTA"), 1e-8)
BLOCKDIAG_GAP = _as_float(_env("BLOCKDIAG_GAP"), 1e-3)
BLOCKDIAG_MAX_DIM_SQ = _as_int(_env("BLOCKDIAG_MAX_DIM_SQ"), 4096)

# Span compression before the sparse component step
SPAN_TAU_REL = _as_float(_env("SPAN_TAU_REL"), 1e-10)

# Tolerances used when the input carries noise
NOISY_VERTEX_TAU_REL = _as_float(_env("NOISY_VERTEX_TAU_REL"), 1e-3)
NOISY_BLOCKDIAG_DELTA = _as_float(_env("NOISY_BLOCKDIAG_DELTA"), 5e-2)
NOISY_SPAN_TAU_REL = _as_float(_env("NOISY_SPAN_TAU_REL"), 1e-2)

# Reporting thresholds eta
DEFAULT_ETAS = (1e-9, 1e-4)

# Sample count per dimension for test functions (N = 100 d)
SAMPLES_PER_DIM = _as_int(_env("SAMPLES_PER_DIM"), 100)

# Quadrature defaults
MC_SAMPLES = _as_int(_env("MC_SAMPLES"), 4096)
GAUSS_NODES = _as_int(_env("GAUSS_NODES"), 32)
