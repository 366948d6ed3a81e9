# Joint block diagonalization
# Commutant operator, error-controlled finest block diagonalization and an equivalence test

import logging
from dataclasses import dataclass
from typing import List, Tuple

import networkx as nx
import numpy as np
import scipy.linalg

import config
from src.core.graphs import BlockStructure, order_groups
from src.core.matrix_set import as_matrix_set, conjugate
from src.errors import BudgetExceededError, InvalidInputError, StageError

logger = logging.getLogger(__name__)

KERNEL_RTOL = 1e-12


@dataclass(frozen=True)
class CommutantSpectrum:
    """
    Spectrum of T = sum_n T_n^T T_n with T_n = H_n^T (x) I - I (x) H_n.

    eigenmatrices[k] is the k-th eigenvector reshaped column-major to d x d.
    """

    eigenvalues: np.ndarray
    eigenmatrices: np.ndarray

    def kernel_threshold(self, delta: float) -> float:
        """delta^2, floored at the eigensolver accuracy relative to lambda_max(T)."""
        top = float(self.eigenvalues[-1]) if self.eigenvalues.size else 0.0
        return max(delta**2, KERNEL_RTOL * top)

    def near_kernel(self, delta: float) -> np.ndarray:
        """Eigenmatrices with eigenvalue below the kernel threshold."""
        return self.eigenmatrices[self.eigenvalues < self.kernel_threshold(delta)]


@dataclass(frozen=True)
class BlockDiagResult:
    """
    Orthogonal U bringing the set to block-diagonal form.

    The columns of U are already permuted so that `structure` consists of
    contiguous groups in block order.
    """

    U: np.ndarray
    structure: BlockStructure
    off_block_residual: float
    eigen_gaps: np.ndarray
    eigenvalues: np.ndarray

    @property
    def profile(self) -> Tuple[int, ...]:
        return self.structure.profile


def commutant_operator(h) -> CommutantSpectrum:
    """
    Assemble T = sum_n T_n^T T_n (d^2 x d^2) and return its full spectrum.

    vec(A H - H A) = (H^T (x) I - I (x) H) vec(A) with column-major vec.

    Raises:
        BudgetExceededError: if d^2 exceeds the dense eigendecomposition cap
    """
    arr = as_matrix_set(h)
    d = arr.shape[1]
    if d * d > config.BLOCKDIAG_MAX_DIM_SQ:
        raise BudgetExceededError(
            f"Commutant operator of size {d * d} exceeds {config.BLOCKDIAG_MAX_DIM_SQ}; "
            "split the input into smaller components first"
        )
    eye = np.eye(d)
    T = np.zeros((d * d, d * d))
    for H in arr:
        Tn = np.kron(H.T, eye) - np.kron(eye, H)
        T += Tn.T @ Tn
    eigenvalues, vectors = scipy.linalg.eigh(0.5 * (T + T.T))
    eigenmatrices = np.stack([v.reshape(d, d, order="F") for v in vectors.T])
    return CommutantSpectrum(eigenvalues, eigenmatrices)


def _split_by_gaps(mu: np.ndarray, gap: float) -> List[List[int]]:
    """Cut the ascending eigenvalues where consecutive gaps exceed the threshold."""
    d = len(mu)
    threshold = gap * max(1.0, abs(mu[-1] - mu[0])) / d
    groups, current = [], [0]
    for i in range(1, d):
        if mu[i] - mu[i - 1] > threshold:
            groups.append(current)
            current = []
        current.append(i)
    groups.append(current)
    return groups


def _merge_coupled(transformed: np.ndarray, groups: List[List[int]], limit: float) -> List[List[int]]:
    """Merge blocks whose cross entries exceed `limit` (transitively)."""
    coupling = nx.Graph()
    coupling.add_nodes_from(range(len(groups)))
    absmax = np.max(np.abs(transformed), axis=0)
    for a in range(len(groups)):
        for b in range(a + 1, len(groups)):
            if absmax[np.ix_(groups[a], groups[b])].max() > limit:
                coupling.add_edge(a, b)
    merged = []
    for component in nx.connected_components(coupling):
        merged.append(sorted(i for k in component for i in groups[k]))
    if len(merged) < len(groups):
        logger.debug(f"Merged {len(groups)} eigen-gap blocks into {len(merged)}")
    return merged


def _off_block_residual(transformed: np.ndarray, structure: BlockStructure) -> float:
    mask = np.ones(transformed.shape[1:], dtype=bool)
    for g in structure.groups:
        mask[np.ix_(g, g)] = False
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(transformed[:, mask])))


def error_controlled_blockdiag(
    h, delta: float, seed: int, gap: float = config.BLOCKDIAG_GAP
) -> BlockDiagResult:
    """
    Finest joint block diagonalization with commutation error delta.

    A random unit combination of the near-commuting eigenmatrices is
    symmetrized and diagonalized; its eigenvalues are constant on blocks and
    separate different blocks with probability one.

    Raises:
        InvalidInputError: if delta is not positive
        StageError: if no eigenvalue of T lies below delta^2
    """
    if delta <= 0:
        raise InvalidInputError("delta must be positive")
    arr = as_matrix_set(h)
    d = arr.shape[1]
    if d == 1:
        structure = BlockStructure(1, ((0,),))
        return BlockDiagResult(np.eye(1), structure, 0.0, np.zeros(0), np.zeros(1))

    spectrum = commutant_operator(arr)
    kernel = spectrum.near_kernel(delta)
    if len(kernel) == 0:
        raise StageError("block_diag", "delta too small: no eigenvalue of T below delta^2")

    rng = np.random.default_rng(seed)
    c = rng.standard_normal(len(kernel))
    c /= np.linalg.norm(c)
    V = np.tensordot(c, kernel, axes=1)
    V = 0.5 * (V + V.T)
    mu, Q = scipy.linalg.eigh(V)

    groups = _split_by_gaps(mu, gap)
    groups = _merge_coupled(conjugate(arr, Q), groups, delta)
    ordered = order_groups(groups)
    permutation = [i for g in ordered for i in g]

    U = Q[:, permutation]
    sizes, pos, contiguous = [len(g) for g in ordered], 0, []
    for size in sizes:
        contiguous.append(tuple(range(pos, pos + size)))
        pos += size
    structure = BlockStructure(d, tuple(contiguous), tuple(permutation))
    residual = _off_block_residual(conjugate(arr, U), structure)
    logger.info(
        f"Block diagonalization: {len(kernel)} near-commuting directions, profile {structure.profile}, "
        f"off-block residual {residual:.3e}"
    )
    return BlockDiagResult(U, structure, residual, np.diff(mu), mu[permutation])


def extract_blocks(result: BlockDiagResult, mats) -> List[np.ndarray]:
    """Diagonal blocks of U^T H_n U, one (N, s, s) stack per group."""
    transformed = conjugate(as_matrix_set(mats), result.U)
    return [transformed[:, g][:, :, g] for g in (list(g) for g in result.structure.groups)]


def _block_spectra(result: BlockDiagResult, mats, coeffs: np.ndarray) -> List[np.ndarray]:
    return [
        np.linalg.eigvalsh(np.tensordot(coeffs, block, axes=1))
        for block in extract_blocks(result, mats)
    ]


def blocks_equivalent(
    a: Tuple[BlockDiagResult, object],
    b: Tuple[BlockDiagResult, object],
    tol: float = 1e-6,
    seed: int = 0,
) -> bool:
    """
    Whether two block diagonalizations agree up to block permutation and
    orthogonal conjugation inside the blocks.

    Blocks are compared through the sorted spectra of sum_n c_n H_n^{(k)}
    for one fixed random c; blocks are matched greedily by spectral distance
    among blocks of equal size, and every match must agree within tol.
    """
    (res_a, mats_a), (res_b, mats_b) = a, b
    arr_a, arr_b = as_matrix_set(mats_a), as_matrix_set(mats_b)
    if arr_a.shape != arr_b.shape:
        return False
    if len(res_a.structure.groups) != len(res_b.structure.groups):
        return False
    if sorted(res_a.profile) != sorted(res_b.profile):
        return False

    coeffs = np.random.default_rng(seed).standard_normal(arr_a.shape[0])
    spectra_a = _block_spectra(res_a, arr_a, coeffs)
    spectra_b = _block_spectra(res_b, arr_b, coeffs)
    scale = max(1.0, max(float(np.max(np.abs(s))) for s in spectra_a + spectra_b))

    unmatched = list(range(len(spectra_b)))
    for sa in sorted(spectra_a, key=len, reverse=True):
        candidates = [k for k in unmatched if len(spectra_b[k]) == len(sa)]
        if not candidates:
            return False
        best = min(candidates, key=lambda k: float(np.max(np.abs(spectra_b[k] - sa))))
        if np.max(np.abs(spectra_b[best] - sa)) > tol * scale:
            return False
        unmatched.remove(best)
    return True


def reconstruction_error(result: BlockDiagResult, mats) -> float:
    """max_n ||U^T H_n U - blockdiag(blocks_n)||_F."""
    arr = as_matrix_set(mats)
    transformed = conjugate(arr, result.U)
    blocks = extract_blocks(result, arr)
    rebuilt = np.stack(
        [scipy.linalg.block_diag(*[blk[n] for blk in blocks]) for n in range(arr.shape[0])]
    )
    return float(np.max(np.linalg.norm(transformed - rebuilt, axis=(1, 2))))
