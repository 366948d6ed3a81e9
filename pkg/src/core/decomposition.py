# Anchored and ANOVA decompositions
# Term evaluation by inclusion-exclusion, derivative oracle, term bounds and norms

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.core.functions import SampledFunction, finite_difference_jacobian
from src.errors import BudgetExceededError, InvalidInputError
from src.models import AnchorConfig, QuadratureKind, QuadratureSpec

logger = logging.getLogger(__name__)

MAX_SUBSET = 20
MAX_GAUSS_DIM = 4
MAX_ORACLE_ORDER = 3

Subset = Tuple[int, ...]


class TermBoundKind(str, Enum):
    """Which estimate of the term bound theorem to evaluate"""

    ANCHORED_INF = "anchored_inf"
    ANOVA_INF = "anova_inf"
    ANOVA_ONE = "anova_one"


@dataclass(frozen=True)
class TermVolumes:
    """Volumes entering the term bounds: lambda_v(D_v), lambda(D), lambda_u(D_u)."""

    vol_v: float = 1.0
    vol_D: float = 1.0
    vol_u: float = 1.0


@dataclass(frozen=True)
class TermNorm:
    """Empirical norms of one decomposition term over a point cloud"""

    subset: Subset
    norm_1: float
    norm_inf: float
    n_samples: int
    seed: int

    def norm(self, p) -> float:
        return self.norm_inf if p in (np.inf, "inf", float("inf")) else self.norm_1


# ==================== Helpers ====================


def _as_subset(u: Iterable[int], d: int) -> Subset:
    subset = tuple(sorted(set(int(i) for i in u)))
    if any(i < 0 or i >= d for i in subset):
        raise InvalidInputError(f"Subset {subset} not contained in range({d})")
    if len(subset) > MAX_SUBSET:
        raise BudgetExceededError("subset too large")
    return subset


def _sub_subsets(u: Subset) -> List[Tuple[Subset, int]]:
    """All v of u with the inclusion-exclusion sign (-1)^{|u|-|v|}."""
    out = []
    for k in range(len(u) + 1):
        for v in itertools.combinations(u, k):
            out.append((v, -1 if (len(u) - k) % 2 else 1))
    return out


def _moebius(values: np.ndarray, d: int) -> np.ndarray:
    """
    Subset Moebius inversion over bitmask-indexed projections.

    values[mask] = P_mask; result[mask] = sum_{v subset mask} (-1)^{|mask|-|v|} P_v.
    """
    out = np.array(values, dtype=float, copy=True)
    for i in range(d):
        bit = 1 << i
        for mask in range(1 << d):
            if mask & bit:
                out[mask] -= out[mask ^ bit]
    return out


def _mask_to_subset(mask: int, d: int) -> Subset:
    return tuple(i for i in range(d) if mask >> i & 1)


def _gauss_rule(lower: np.ndarray, upper: np.ndarray, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss-Legendre nodes on a box with weights of the normalized measure."""
    base_x, base_w = np.polynomial.legendre.leggauss(nodes)
    axes = [lo + (hi - lo) * (base_x + 1) / 2 for lo, hi in zip(lower, upper)]
    weights = [base_w / 2 for _ in axes]
    if not axes:
        return np.zeros((1, 0)), np.ones(1)
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    w = np.ones(1)
    for wi in weights:
        w = np.outer(w, wi).ravel()
    return grid, w


# ==================== Anchored decomposition ====================


def anchored_term(f: SampledFunction, u: Iterable[int], cfg: AnchorConfig, x) -> float:
    """
    Anchored term f_{u,c}(x) = sum_{v in u} (-1)^{|u|-|v|} f(x_v, c_rest).

    Exact up to floating point, 2^{|u|} evaluations.
    """
    u = _as_subset(u, f.d)
    c = np.asarray(cfg.c, dtype=float)
    x = np.asarray(x, dtype=float)
    if c.shape != (f.d,) or x.shape != (f.d,):
        raise InvalidInputError("Anchor and point must be d-vectors")
    subsets = _sub_subsets(u)
    points = np.repeat(c[None, :], len(subsets), axis=0)
    signs = np.empty(len(subsets))
    for k, (v, sign) in enumerate(subsets):
        points[k, list(v)] = x[list(v)]
        signs[k] = sign
    return float(np.dot(signs, f.value(points)))


def anchored_all_terms(
    f: SampledFunction, cfg: AnchorConfig, points: np.ndarray
) -> Dict[Subset, np.ndarray]:
    """Every anchored term f_{u,c} evaluated at a batch of points (d small)."""
    d = f.d
    if d > MAX_SUBSET:
        raise BudgetExceededError("subset too large")
    c = np.asarray(cfg.c, dtype=float)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    proj = np.empty((1 << d, points.shape[0]))
    for mask in range(1 << d):
        v = list(_mask_to_subset(mask, d))
        pts = np.repeat(c[None, :], points.shape[0], axis=0)
        pts[:, v] = points[:, v]
        proj[mask] = f.value(pts)
    terms = _moebius(proj, d)
    return {_mask_to_subset(mask, d): terms[mask] for mask in range(1 << d)}


# ==================== ANOVA decomposition ====================


def _projection_samples(f: SampledFunction, q: QuadratureSpec, free: Sequence[int]):
    """Integration nodes for the coordinates in `free` and their weights."""
    box = f.domain
    if q.kind == QuadratureKind.TENSOR_GAUSS:
        if len(free) > MAX_GAUSS_DIM:
            raise BudgetExceededError(
                f"tensor_gauss limited to integration dimension <= {MAX_GAUSS_DIM}, got {len(free)}"
            )
        nodes, weights = _gauss_rule(box.lower[list(free)], box.upper[list(free)], q.samples_or_nodes)
        return nodes, weights
    rng = np.random.default_rng(q.seed)
    samples = box.sample(q.samples_or_nodes, rng)
    weights = np.full(q.samples_or_nodes, 1.0 / q.samples_or_nodes)
    return samples[:, list(free)], weights


def _anova_combination(
    f: SampledFunction, u: Subset, x: np.ndarray, q: QuadratureSpec
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-node inclusion-exclusion combination and node weights.

    With Monte Carlo every subset reuses the same random stream, so the
    combination is evaluated sample-wise.
    """
    d = f.d
    if q.kind == QuadratureKind.TENSOR_GAUSS:
        total = 0.0
        for v, sign in _sub_subsets(u):
            free = [i for i in range(d) if i not in v]
            nodes, weights = _projection_samples(f, q, free)
            pts = np.repeat(x[None, :], len(weights), axis=0)
            if free:
                pts[:, free] = nodes
            total += sign * float(np.dot(weights, f.value(pts)))
        return np.array([total]), np.ones(1)

    rng = np.random.default_rng(q.seed)
    y = f.domain.sample(q.samples_or_nodes, rng)
    combo = np.zeros(q.samples_or_nodes)
    for v, sign in _sub_subsets(u):
        pts = y.copy()
        pts[:, list(v)] = x[list(v)]
        combo += sign * f.value(pts)
    return combo, np.full(q.samples_or_nodes, 1.0 / q.samples_or_nodes)


def anova_term(f: SampledFunction, u: Iterable[int], x, q: QuadratureSpec) -> float:
    """
    ANOVA term f_{u,A}(x) = sum_{v in u} (-1)^{|u|-|v|} int f(x_v, y_rest) dlambda(y).

    Integrals use the normalized Lebesgue measure of the function's box.
    """
    u = _as_subset(u, f.d)
    x = np.asarray(x, dtype=float)
    if x.shape != (f.d,):
        raise InvalidInputError("Point must be a d-vector")
    combo, weights = _anova_combination(f, u, x, q)
    return float(np.dot(weights, combo))


def anova_term_stderr(f: SampledFunction, u: Iterable[int], x, q: QuadratureSpec) -> float:
    """Monte Carlo standard error of anova_term (0 for Gauss rules)."""
    if q.kind == QuadratureKind.TENSOR_GAUSS:
        return 0.0
    u = _as_subset(u, f.d)
    combo, _ = _anova_combination(f, u, np.asarray(x, dtype=float), q)
    return float(np.std(combo, ddof=1) / np.sqrt(len(combo)))


def anova_all_terms(
    f: SampledFunction, points: np.ndarray, q: QuadratureSpec
) -> Dict[Subset, np.ndarray]:
    """
    Every ANOVA term at a batch of points.

    All 2^d projections are estimated once with a shared sample, then the
    terms follow by Moebius inversion.
    """
    d = f.d
    if d > MAX_SUBSET:
        raise BudgetExceededError("subset too large")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    proj = np.empty((1 << d, points.shape[0]))
    for mask in range(1 << d):
        v = list(_mask_to_subset(mask, d))
        free = [i for i in range(d) if i not in v]
        if not free:
            proj[mask] = f.value(points)
            continue
        nodes, weights = _projection_samples(f, q, free)
        for p_idx, x in enumerate(points):
            pts = np.repeat(x[None, :], len(weights), axis=0)
            pts[:, free] = nodes
            proj[mask, p_idx] = float(np.dot(weights, f.value(pts)))
    terms = _moebius(proj, d)
    return {_mask_to_subset(mask, d): terms[mask] for mask in range(1 << d)}


# ==================== Derivative oracle ====================


def mixed_partial(
    f: SampledFunction, u: Subset, points: np.ndarray, allow_finite_differences: bool = True
) -> np.ndarray:
    """Mixed derivative d_u f at a batch of points (|u| <= 3, distinct indices)."""
    if len(u) > MAX_ORACLE_ORDER:
        raise BudgetExceededError(f"Mixed derivatives limited to order {MAX_ORACLE_ORDER}")
    if not allow_finite_differences and (
        (len(u) == 1 and f.grad is None) or (len(u) >= 2 and f.hess is None)
    ):
        raise InvalidInputError("missing derivative access")
    if len(u) == 0:
        return f.value(points)
    if len(u) == 1:
        return f.gradient(points)[..., u[0]]
    if len(u) == 2:
        return f.hessian(points)[..., u[0], u[1]]
    i, j, k = u
    jac = finite_difference_jacobian(lambda y: f.hessian(y)[..., i, j, None] * np.ones(f.d), points)
    return jac[..., 0, k]


def anchored_term_via_derivative(
    f: SampledFunction,
    u: Iterable[int],
    cfg: AnchorConfig,
    x,
    q: QuadratureSpec,
    allow_finite_differences: bool = True,
) -> float:
    """
    Integral representation of the anchored term.

    f_{u,c}(x) = int over the rectangle between c_u and x_u of
    d_u f(t_u, c_rest), each coordinate integrated with orientation sign.
    """
    u = _as_subset(u, f.d)
    c = np.asarray(cfg.c, dtype=float)
    x = np.asarray(x, dtype=float)
    if len(u) == 0:
        return float(f.value(c))
    if len(u) > MAX_ORACLE_ORDER:
        raise BudgetExceededError(f"Derivative oracle limited to |u| <= {MAX_ORACLE_ORDER}")

    lo, hi = c[list(u)], x[list(u)]
    signed_volume = float(np.prod(hi - lo))
    if q.kind == QuadratureKind.TENSOR_GAUSS:
        nodes, weights = _gauss_rule(lo, hi, q.samples_or_nodes)
    else:
        rng = np.random.default_rng(q.seed)
        nodes = lo + rng.random((q.samples_or_nodes, len(u))) * (hi - lo)
        weights = np.full(q.samples_or_nodes, 1.0 / q.samples_or_nodes)
    pts = np.repeat(c[None, :], len(weights), axis=0)
    pts[:, list(u)] = nodes
    values = mixed_partial(f, u, pts, allow_finite_differences)
    return signed_volume * float(np.dot(weights, values))


# ==================== Bounds and norms ====================


def term_bound(
    u: Iterable[int],
    v: Iterable[int],
    deriv_norm: float,
    vols: TermVolumes,
    which: TermBoundKind,
) -> float:
    """
    Upper bound of a decomposition term by a derivative norm.

    anchored_inf: 2^{|u|-|v|} ||d_v f||_inf lambda_v(D_v)
    anova_inf:    the same times lambda(D)
    anova_one:    2^{|u|-|v|} ||d_v f||_1 lambda_u(D_u) lambda_v(D_v)
    """
    u, v = set(u), set(v)
    if not v <= u:
        raise InvalidInputError(f"{sorted(v)} is not a subset of {sorted(u)}")
    if deriv_norm < 0:
        raise InvalidInputError("deriv_norm must be nonnegative")
    factor = 2.0 ** (len(u) - len(v)) * deriv_norm
    which = TermBoundKind(which)
    if which == TermBoundKind.ANCHORED_INF:
        return factor * vols.vol_v
    if which == TermBoundKind.ANOVA_INF:
        return factor * vols.vol_v * vols.vol_D
    return factor * vols.vol_u * vols.vol_v


def _empirical_norm(values: np.ndarray, p, axis=0) -> np.ndarray:
    values = np.abs(values)
    if p in (np.inf, "inf", float("inf")):
        return np.max(values, axis=axis)
    if p == 1:
        return np.mean(values, axis=axis)
    raise InvalidInputError(f"Unsupported norm p={p}")


def derivative_norms(f: SampledFunction, points: np.ndarray, p) -> Tuple[np.ndarray, np.ndarray]:
    """Empirical p-norms of first partials (d,) and mixed second partials (d, d)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] == 0:
        raise InvalidInputError("empty point list")
    first = _empirical_norm(f.gradient(points), p)
    second = _empirical_norm(f.hessian(points), p)
    return first, second


def derivative_smallness_counts(
    f: SampledFunction, points: np.ndarray, p, tol: float = 1e-4
) -> Tuple[int, int]:
    """
    Count small derivatives.

    G = #{i : ||d_i f||_p <= tol}, H = #{{i,j}, i != j : ||d_ij f||_p <= tol}.
    The empirical inf-norm is the max over points, the 1-norm the mean.
    """
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    first, second = derivative_norms(f, points, p)
    G = int(np.sum(first <= tol))
    iu = np.triu_indices(f.d, k=1)
    H = int(np.sum(second[iu] <= tol))
    logger.debug(f"Derivative smallness for {f.name} (p={p}): G={G}, H={H}")
    return G, H


def anova_term_norms(
    f: SampledFunction,
    points: np.ndarray,
    q: QuadratureSpec,
    orders: Optional[Sequence[int]] = None,
) -> Dict[Subset, TermNorm]:
    """Empirical 1- and inf-norms of ANOVA terms of the requested orders."""
    terms = anova_all_terms(f, points, q)
    n = np.atleast_2d(points).shape[0]
    out = {}
    for u, values in terms.items():
        if orders is not None and len(u) not in orders:
            continue
        out[u] = TermNorm(
            subset=u,
            norm_1=float(_empirical_norm(values, 1)),
            norm_inf=float(_empirical_norm(values, np.inf)),
            n_samples=n,
            seed=q.seed,
        )
    return out


def superset_max_norm(norms: Dict[Subset, TermNorm], u: Iterable[int], p) -> float:
    """||f||_{u,p}: the largest term norm over computed supersets of u."""
    u = set(u)
    candidates = [tn.norm(p) for w, tn in norms.items() if u <= set(w)]
    return max(candidates) if candidates else 0.0


def minimal_term_norm(norms: Dict[Subset, TermNorm], order: int, p) -> float:
    """Smallest term norm among subsets of the given order."""
    candidates = [tn.norm(p) for w, tn in norms.items() if len(w) == order]
    if not candidates:
        raise InvalidInputError(f"No terms of order {order} were computed")
    return min(candidates)


def term_norm_report_rows(
    f: SampledFunction,
    norms: Dict[Subset, TermNorm],
    points: np.ndarray,
    tol: float = 1e-4,
) -> List[Dict[str, object]]:
    """
    Tidy rows (subset, p, estimate, bound, n_samples, seed) for CSV export.

    The bound column is the reference line 2^{d-k} max{||d_v f||_p <= tol, |v| = k}
    for terms of order k in {1, 2}; empty when no derivative of that order is small.
    """
    rows = []
    for p, label in ((1, "1"), (np.inf, "inf")):
        first, second = derivative_norms(f, points, p)
        small_first = first[first <= tol]
        iu = np.triu_indices(f.d, k=1)
        small_second = second[iu][second[iu] <= tol]
        reference = {
            1: float(small_first.max()) if small_first.size else None,
            2: float(small_second.max()) if small_second.size else None,
        }
        for u, tn in sorted(norms.items(), key=lambda item: (len(item[0]), item[0])):
            if not u:
                continue
            ref = reference.get(len(u))
            rows.append(
                {
                    "subset": "{" + ",".join(str(i + 1) for i in u) + "}",
                    "p": label,
                    "estimate": superset_max_norm(norms, u, p),
                    "bound": None if ref is None else 2.0 ** (f.d - len(u)) * ref,
                    "n_samples": tn.n_samples,
                    "seed": tn.seed,
                }
            )
    return rows


def compose_rotation(f: SampledFunction, U) -> SampledFunction:
    """f_U(x) = f(Ux) with grad U^T grad f(U.) and Hessian U^T H(U.) U."""
    U = np.asarray(U, dtype=float)
    if U.shape != (f.d, f.d):
        raise InvalidInputError(f"Rotation of shape {U.shape} does not act on d={f.d}")
    return f.rotated(U)
