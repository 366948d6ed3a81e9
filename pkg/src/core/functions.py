# Sampled functions
# Function handles with value / gradient / Hessian evaluators on a ball domain

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional

import numpy as np

from src.errors import InvalidInputError

logger = logging.getLogger(__name__)

Evaluator = Callable[[np.ndarray], np.ndarray]

FD_STEP = 1e-5


@dataclass(frozen=True)
class Box:
    """Product domain prod_i [lower_i, upper_i]."""

    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def cube(cls, d: int, r: float) -> "Box":
        return cls(np.full(d, -float(r)), np.full(d, float(r)))

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def volume(self, subset=None) -> float:
        """Lebesgue volume of the projection of the box onto `subset`."""
        widths = self.widths if subset is None else self.widths[list(subset)]
        return float(np.prod(widths)) if len(widths) else 1.0

    def contains(self, x: np.ndarray) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - 1e-12) and np.all(x <= self.upper + 1e-12))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.lower + rng.random((n, len(self.lower))) * self.widths


@dataclass(frozen=True)
class SampledFunction:
    """
    A smooth function f: B_r(d) -> R with optional analytic derivatives.

    Evaluators are vectorized: they accept arrays of shape (..., d) and return
    (...), (..., d) and (..., d, d) respectively. Missing derivatives fall back
    to central finite differences.
    """

    d: int
    radius: float
    evaluate: Evaluator
    grad: Optional[Evaluator] = None
    hess: Optional[Evaluator] = None
    domain: Optional[Box] = None
    ground_truth: Dict[str, Any] = field(default_factory=dict)
    name: str = "f"

    def __post_init__(self):
        if self.d < 1 or self.radius <= 0:
            raise InvalidInputError(f"Invalid function domain d={self.d}, r={self.radius}")
        if self.domain is None:
            object.__setattr__(self, "domain", Box.cube(self.d, self.radius))

    # ---------- evaluation ----------

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.evaluate(np.asarray(x, dtype=float)), dtype=float)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float)
        return finite_difference_gradient(self.evaluate, x)

    def hessian(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.hess is not None:
            return np.asarray(self.hess(x), dtype=float)
        if self.grad is not None:
            jac = finite_difference_jacobian(self.grad, x)
            return 0.5 * (jac + np.swapaxes(jac, -1, -2))
        return finite_difference_hessian(self.evaluate, x)

    @property
    def has_derivatives(self) -> bool:
        return self.grad is not None and self.hess is not None

    # ---------- sampling ----------

    def sample_points(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Points uniform in the ball B_r(d)."""
        return sample_ball(n, self.d, self.radius, rng)

    # ---------- transformations ----------

    def rotated(self, U: np.ndarray, name: Optional[str] = None) -> "SampledFunction":
        """f_U(x) = f(U x), with grad U^T grad f(Ux) and Hessian U^T H(Ux) U."""
        U = np.asarray(U, dtype=float)
        base = self

        def evaluate(x):
            return base.value(x @ U.T)

        def grad(x):
            return base.gradient(x @ U.T) @ U

        def hess(x):
            return np.einsum("ji,...jk,kl->...il", U, base.hessian(x @ U.T), U)

        return SampledFunction(
            d=self.d,
            radius=self.radius,
            evaluate=evaluate,
            grad=grad,
            hess=hess,
            domain=self.domain,
            ground_truth=dict(self.ground_truth),
            name=name or f"{self.name}_U",
        )

    def plus(self, other: "SampledFunction", name: Optional[str] = None) -> "SampledFunction":
        """Pointwise sum f + g (used for the noisy variants)."""
        if other.d != self.d:
            raise InvalidInputError("Cannot add functions of different dimension")
        a, b = self, other
        return SampledFunction(
            d=self.d,
            radius=self.radius,
            evaluate=lambda x: a.value(x) + b.value(x),
            grad=lambda x: a.gradient(x) + b.gradient(x),
            hess=lambda x: a.hessian(x) + b.hessian(x),
            domain=self.domain,
            ground_truth=dict(self.ground_truth),
            name=name or f"{self.name}+{other.name}",
        )


def sample_ball(n: int, d: int, r: float, rng: np.random.Generator) -> np.ndarray:
    """n points uniformly distributed in the Euclidean ball of radius r."""
    directions = rng.standard_normal((n, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = r * rng.random(n) ** (1.0 / d)
    return directions * radii[:, None]


def _steps(x: np.ndarray) -> np.ndarray:
    return FD_STEP * np.maximum(1.0, np.abs(x))


def finite_difference_gradient(fn: Evaluator, x: np.ndarray) -> np.ndarray:
    """Central-difference gradient of a vectorized scalar function."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    out = np.empty(x.shape, dtype=float)
    h = _steps(x)
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        step = h[..., i : i + 1] * e
        out[..., i] = (np.asarray(fn(x + step)) - np.asarray(fn(x - step))) / (2 * h[..., i])
    return out


def finite_difference_jacobian(fn: Evaluator, x: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian of a vectorized vector field."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    out = np.empty(x.shape + (d,), dtype=float)
    h = _steps(x)
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        step = h[..., i : i + 1] * e
        out[..., :, i] = (np.asarray(fn(x + step)) - np.asarray(fn(x - step))) / (
            2 * h[..., i : i + 1]
        )
    return out


def finite_difference_hessian(fn: Evaluator, x: np.ndarray) -> np.ndarray:
    """Hessian from nested central differences of function values."""
    jac = finite_difference_jacobian(lambda y: finite_difference_gradient(fn, y), x)
    return 0.5 * (jac + np.swapaxes(jac, -1, -2))


def check_derivatives(
    f: SampledFunction, n_points: int = 20, seed: int = 0, rel_tol: float = 1e-4
) -> Dict[str, Any]:
    """
    Compare analytic derivatives with finite differences of `evaluate`.

    Returns the maximal relative errors and whether both stay under rel_tol.
    """
    rng = np.random.default_rng(seed)
    points = f.sample_points(n_points, rng) * 0.9
    report: Dict[str, Any] = {"grad_rel_error": 0.0, "hess_rel_error": 0.0}
    if f.grad is not None:
        analytic = f.grad(points)
        numeric = finite_difference_gradient(f.evaluate, points)
        scale = max(1.0, float(np.max(np.abs(numeric))))
        report["grad_rel_error"] = float(np.max(np.abs(analytic - numeric)) / scale)
    if f.hess is not None:
        analytic = f.hess(points)
        source = f.grad if f.grad is not None else None
        if source is not None:
            numeric = finite_difference_jacobian(source, points)
        else:
            numeric = finite_difference_hessian(f.evaluate, points)
        scale = max(1.0, float(np.max(np.abs(numeric))))
        report["hess_rel_error"] = float(np.max(np.abs(analytic - numeric)) / scale)
    report["ok"] = (
        report["grad_rel_error"] <= rel_tol and report["hess_rel_error"] <= rel_tol
    )
    logger.debug(f"Derivative check for {f.name}: {report}")
    return report
