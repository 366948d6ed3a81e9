# Evaluation metrics
# Sparsity gap chi, failure ratio, histogram bins and optimality gaps

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from src.core.graphs import BlockStructure, SparsityPattern, pattern_from_matrix_set
from src.core.matrix_set import as_matrix_set, conjugate
from src.errors import InvalidInputError
from src.manifold.loss import loss_eps
from src.models import LossConfig

logger = logging.getLogger(__name__)

HISTOGRAM_BINS = ("0", "1", "2", ">=3", "<0")


@dataclass(frozen=True)
class GroundTruth:
    """Known support of the sparse representation and, if known, its transform."""

    pattern: SparsityPattern
    U: Optional[np.ndarray] = None


def sparsity_gap(U, mats, truth: SparsityPattern, eta: float) -> int:
    """
    chi(U, eta): ordered nonzero count of the thresholded mean-absolute
    transformed matrix minus the ordered count of the truth.

    Both counts include the diagonal support.
    """
    arr = as_matrix_set(mats)
    if truth.d != arr.shape[1]:
        raise InvalidInputError(f"Truth of dimension {truth.d} for matrices of dimension {arr.shape[1]}")
    found = pattern_from_matrix_set(conjugate(arr, np.asarray(U, dtype=float)), eta)
    chi = found.ordered_count - truth.ordered_count
    if chi < 0:
        logger.warning(f"chi={chi} at eta={eta:g}: the threshold removes true support")
    return chi


def failure_ratio(gaps: Sequence[int]) -> float:
    """
    Fraction of failed trials: mean of min{1, chi} with negative chi counted
    as a failure.
    """
    if len(gaps) == 0:
        raise InvalidInputError("failure ratio of an empty trial list")
    return float(np.mean([0.0 if chi == 0 else 1.0 for chi in gaps]))


def chi_histogram(gaps: Sequence[int]) -> Dict[str, int]:
    """Trial counts in the bins 0, 1, 2, >=3 (plus <0 for over-thresholding)."""
    counts = dict.fromkeys(HISTOGRAM_BINS, 0)
    for chi in gaps:
        if chi < 0:
            counts["<0"] += 1
        elif chi >= 3:
            counts[">=3"] += 1
        else:
            counts[str(int(chi))] += 1
    return counts


def block_loss_sum(
    U, mats, structure: BlockStructure, cfg: Optional[LossConfig] = None
) -> float:
    """sum_k l_eps of the diagonal blocks of U^T H_n U over the groups of `structure`."""
    cfg = cfg or LossConfig.matrix_experiment()
    transformed = conjugate(as_matrix_set(mats), np.asarray(U, dtype=float))
    total = 0.0
    for group in structure.groups:
        g = list(group)
        block = transformed[:, g][:, :, g]
        total += loss_eps(np.eye(len(g)), block, cfg)
    return total


def optimality_gap(
    U,
    reference,
    mats,
    cfg: Optional[LossConfig] = None,
    structure: Optional[BlockStructure] = None,
) -> float:
    """Loss of U minus loss of the reference transform (R^T for generated sets)."""
    arr = as_matrix_set(mats)
    cfg = cfg or LossConfig.matrix_experiment()
    if structure is None:
        return loss_eps(U, arr, cfg) - loss_eps(reference, arr, cfg)
    return block_loss_sum(U, arr, structure, cfg) - block_loss_sum(reference, arr, structure, cfg)
