# Jointly sparsifiable matrix sets
# Haar rotations, random supports and the rotated sparse families H_R(J)

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from src.core.graphs import SparsityPattern
from src.errors import InvalidInputError
from src.models import MatrixInstanceSpec

logger = logging.getLogger(__name__)

# Largest |J| (unordered slots, diagonal included) used by the matrix experiments
PROTOCOL_MAX_SIZE: Dict[int, int] = {2: 3, 3: 6, 4: 7, 5: 11}


@dataclass(frozen=True)
class MatrixInstance:
    """A generated set together with its ground truth"""

    spec: MatrixInstanceSpec
    mats: np.ndarray
    R: np.ndarray
    pattern: SparsityPattern
    clean: Optional[np.ndarray] = None

    @property
    def truth_transform(self) -> np.ndarray:
        """U = R^T maps the set back onto the sparse support."""
        return self.R.T

    @property
    def reference_set(self) -> np.ndarray:
        """Noise-free set (the set itself when sigma = 0)."""
        return self.mats if self.clean is None else self.clean


def haar_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform rotation: QR of a Gaussian matrix, diag(R) > 0, det fixed to +1."""
    if d < 1:
        raise InvalidInputError("Dimension must be positive")
    Z = rng.standard_normal((d, d))
    Q, R = np.linalg.qr(Z)
    Q = Q * np.sign(np.diag(R))[None, :]
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def random_pattern(d: int, size: int, rng: np.random.Generator) -> SparsityPattern:
    """
    Random support J with `size` unordered slots (i <= j, diagonal included).

    Sizes above the experiment bounds are allowed but logged.
    """
    slots = [(i, j) for i in range(d) for j in range(i, d)]
    if not 1 <= size <= len(slots):
        raise InvalidInputError(f"|J| must lie in [1, {len(slots)}] for d={d}, got {size}")
    if d in PROTOCOL_MAX_SIZE and size > PROTOCOL_MAX_SIZE[d]:
        logger.warning(f"|J|={size} exceeds the experiment bound {PROTOCOL_MAX_SIZE[d]} for d={d}")
    chosen = sorted(rng.choice(len(slots), size=size, replace=False).tolist())
    off = [slots[k] for k in chosen if slots[k][0] != slots[k][1]]
    diag = [slots[k][0] for k in chosen if slots[k][0] == slots[k][1]]
    return SparsityPattern.from_edges(d, off, diag)


def sparse_family(pattern: SparsityPattern, N: int, rng: np.random.Generator) -> np.ndarray:
    """N symmetric matrices with Unif[-1, 1] entries exactly on the support."""
    d = pattern.d
    mats = np.zeros((N, d, d))
    for i, j in sorted(pattern.off_diag):
        values = rng.uniform(-1.0, 1.0, N)
        mats[:, i, j] = values
        mats[:, j, i] = values
    for i in sorted(pattern.diag):
        mats[:, i, i] = rng.uniform(-1.0, 1.0, N)
    return mats


def symmetric_noise(N: int, d: int, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Symmetric Gaussian perturbations with N(0, sigma^2) entries."""
    upper = np.triu(rng.normal(0.0, sigma, (N, d, d)))
    return upper + np.swapaxes(np.triu(upper, k=1), -1, -2)


def gen_matrix_set(spec: MatrixInstanceSpec) -> MatrixInstance:
    """
    H_R(J) = {R^T H~_n R}, plus symmetric Gaussian noise when sigma > 0.

    Entries use the entry seed, the rotation the rotation seed, and the
    noise a stream derived from both.
    """
    pattern = SparsityPattern.from_edges(spec.d, spec.off_diag, spec.diag)
    base = sparse_family(pattern, spec.N, np.random.default_rng(spec.entry_seed))
    R = haar_rotation(spec.d, np.random.default_rng(spec.rotation_seed))
    clean = np.einsum("ji,njk,kl->nil", R, base, R)
    clean = 0.5 * (clean + np.swapaxes(clean, -1, -2))
    if spec.sigma > 0:
        rng = np.random.default_rng([spec.entry_seed, spec.rotation_seed])
        noisy = clean + symmetric_noise(spec.N, spec.d, spec.sigma, rng)
        return MatrixInstance(spec, noisy, R, pattern, clean=clean)
    return MatrixInstance(spec, clean, R, pattern)


def random_instance_spec(
    d: int, size: int, N: int, sigma: float, seed: int
) -> MatrixInstanceSpec:
    """Instance spec with a random support; all seeds derived from `seed`."""
    rng = np.random.default_rng(seed)
    pattern = random_pattern(d, size, rng)
    rotation_seed, entry_seed = (int(s) for s in rng.integers(0, 2**63 - 1, size=2))
    return MatrixInstanceSpec(
        d=d,
        off_diag=sorted(pattern.off_diag),
        diag=sorted(pattern.diag),
        N=N,
        rotation_seed=rotation_seed,
        entry_seed=entry_seed,
        sigma=sigma,
    )
