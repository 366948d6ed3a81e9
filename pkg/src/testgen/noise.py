# Gaussian-mixture noise function
# N(x) = 1/2000 sum_{mu in G_d} exp(-1/2 (x-mu)^T Z^{-1} (x-mu)), Z = I/2

import numpy as np

from src.core.functions import SampledFunction
from src.errors import BudgetExceededError

MAX_NOISE_DIM = 16
AMPLITUDE = 1.0 / 2000.0
CENTERS = (-0.5, 1.5)


def _coordinate_sums(x: np.ndarray):
    """s(x) = sum_c exp(-(x-c)^2) per coordinate with s' and s''."""
    s = np.zeros_like(x)
    s1 = np.zeros_like(x)
    s2 = np.zeros_like(x)
    for c in CENTERS:
        e = np.exp(-((x - c) ** 2))
        s += e
        s1 += -2.0 * (x - c) * e
        s2 += (4.0 * (x - c) ** 2 - 2.0) * e
    return s, s1, s2


def noise_function(x, d: int):
    """
    Value, gradient and Hessian of the mixture at x (shape (..., d)).

    The 2^d centers form a product grid and Z is isotropic, so the sum
    factorizes into prod_i s(x_i); derivatives follow in closed form.

    Raises:
        BudgetExceededError: for d > 16 (the mixture has 2^d centers)
    """
    if d > MAX_NOISE_DIM:
        raise BudgetExceededError(
            f"Noise mixture has 2^d = {2 ** d} centers; limited to d <= {MAX_NOISE_DIM}"
        )
    x = np.asarray(x, dtype=float)
    s, s1, s2 = _coordinate_sums(x)
    value = AMPLITUDE * np.prod(s, axis=-1)
    ratio1 = s1 / s
    grad = value[..., None] * ratio1
    hess = value[..., None, None] * ratio1[..., :, None] * ratio1[..., None, :]
    diag = value[..., None] * s2 / s
    idx = np.arange(d)
    hess[..., idx, idx] = diag
    return value, grad, hess


def noise_sampled_function(d: int, radius: float = 1.0) -> SampledFunction:
    """The noise mixture as a SampledFunction."""
    if d > MAX_NOISE_DIM:
        raise BudgetExceededError(
            f"Noise mixture has 2^d = {2 ** d} centers; limited to d <= {MAX_NOISE_DIM}"
        )
    return SampledFunction(
        d=d,
        radius=radius,
        evaluate=lambda x: noise_function(x, d)[0],
        grad=lambda x: noise_function(x, d)[1],
        hess=lambda x: noise_function(x, d)[2],
        name="N",
    )
