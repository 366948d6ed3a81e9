# Sufficient optimality check for edge minimization

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from src.core.matrix_set import as_matrix_set, conjugate

logger = logging.getLogger(__name__)

RANK_TOL = 1e-10


class CertificateStatus(str, Enum):
    CERTIFIED_OPTIMAL = "certified_optimal"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class OptimalityCertificate:
    """
    Outcome of the count test against max{dim span, max rank}.

    `nonzeros_ordered` counts entries (i, j) of [d]^2 and decides the status;
    `nonzeros_unordered` counts pairs i <= j and is reported alongside.
    """

    status: CertificateStatus
    nonzeros_ordered: int
    nonzeros_unordered: int
    dim_span: int
    max_rank: int

    @property
    def bound(self) -> int:
        return max(self.dim_span, self.max_rank)


def _numerical_rank(matrix: np.ndarray, tol: float) -> int:
    sigma = np.linalg.svd(matrix, compute_uv=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0
    return int(np.sum(sigma > tol * sigma[0]))


def sufficient_optimality_check(
    mats, U, count_tol: float = 1e-12, rank_tol: float = RANK_TOL
) -> OptimalityCertificate:
    """
    Certify U as a global minimizer of the entry count.

    The entry count of U^T H_n U is bounded below by the dimension of the
    span and by every rank; reaching the bound proves optimality. The test
    needs zero diagonals of the transformed set, otherwise the status is
    unknown.
    """
    arr = as_matrix_set(mats)
    n, d, _ = arr.shape
    M = conjugate(arr, np.asarray(U, dtype=float))
    mean_sq = np.mean(M**2, axis=0)
    support = mean_sq > count_tol
    ordered = int(np.sum(support))
    unordered = int(np.sum(np.triu(support)))

    dim_span = _numerical_rank(arr.reshape(n, d * d), rank_tol)
    max_rank = max(_numerical_rank(H, rank_tol) for H in arr)

    zero_diagonal = not np.any(np.diag(support))
    certified = zero_diagonal and ordered == max(dim_span, max_rank)
    status = CertificateStatus.CERTIFIED_OPTIMAL if certified else CertificateStatus.UNKNOWN
    logger.debug(
        f"Optimality check: k={ordered} (unordered {unordered}), dim span {dim_span}, "
        f"max rank {max_rank} -> {status.value}"
    )
    return OptimalityCertificate(status, ordered, unordered, dim_span, max_rank)
