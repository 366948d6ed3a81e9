# Manifold Package for SPARSEADD
# Sparsity losses and optimization over the special orthogonal group

from .loss import (
    loss_eps,
    loss_half_two,
    euclidean_gradient,
    span_basis,
)
from .riemannian import (
    riemannian_gradient,
    qr_retraction,
    orthogonality_defect,
)
from .linesearch import BacktrackingLineSearcher
from .optimizers import (
    Trajectory,
    rgd_minimize,
    landing_minimize,
    optimize,
    project_to_rotation,
)
from .rotations import (
    jacobi_rotation,
    apply_jacobi_right,
    angles_to_rotation,
    rotation_to_angles,
    snap_to_grid,
)
from .grid import GridResult, grid_cardinality, grid_search, scan_grid
from .initialization import random_init
from .polish import PolishResult, support_polish
from .certificate import (
    CertificateStatus,
    OptimalityCertificate,
    sufficient_optimality_check,
)

__all__ = [
    "loss_eps",
    "loss_half_two",
    "euclidean_gradient",
    "span_basis",
    "riemannian_gradient",
    "qr_retraction",
    "orthogonality_defect",
    "BacktrackingLineSearcher",
    "Trajectory",
    "rgd_minimize",
    "landing_minimize",
    "optimize",
    "project_to_rotation",
    "jacobi_rotation",
    "apply_jacobi_right",
    "angles_to_rotation",
    "rotation_to_angles",
    "snap_to_grid",
    "GridResult",
    "grid_cardinality",
    "grid_search",
    "scan_grid",
    "random_init",
    "PolishResult",
    "support_polish",
    "CertificateStatus",
    "OptimalityCertificate",
    "sufficient_optimality_check",
]
