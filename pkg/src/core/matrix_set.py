# Symmetric matrix sets
# Validation and conjugation helpers for stacks of N symmetric d x d matrices

from typing import Iterable, Union

import numpy as np

from src.errors import InvalidInputError

MatrixSetLike = Union[np.ndarray, Iterable[np.ndarray]]


def as_matrix_set(mats: MatrixSetLike, allow_empty: bool = False) -> np.ndarray:
    """
    Convert input into an (N, d, d) float array.

    Raises:
        InvalidInputError: if the set is empty or the matrices are not square
            and of one common dimension
    """
    arr = np.asarray(list(mats) if not isinstance(mats, np.ndarray) else mats, dtype=float)
    if arr.size == 0 and arr.ndim <= 1:
        if allow_empty:
            return arr.reshape(0, 0, 0)
        raise InvalidInputError("no matrices")
    if arr.ndim == 2:
        arr = arr[None, :, :]
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise InvalidInputError(f"Expected a stack of square matrices, got shape {arr.shape}")
    if arr.shape[0] == 0 and not allow_empty:
        raise InvalidInputError("no matrices")
    return arr


def conjugate(mats: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Return the stack U^T H_n U."""
    return np.einsum("ji,njk,kl->nil", U, mats, U, optimize=True)


def symmetrize(mats: np.ndarray) -> np.ndarray:
    """Exact symmetric part of every matrix of the stack."""
    return 0.5 * (mats + np.swapaxes(mats, -1, -2))


def mean_abs(mats: np.ndarray) -> np.ndarray:
    """Entrywise mean absolute value (1/N) sum |H_n|."""
    return np.mean(np.abs(mats), axis=0)
