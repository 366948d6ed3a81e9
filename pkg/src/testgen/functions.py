# Sparse additive test functions
# f~(x) = sum c_jk g_jk1(x_j) g_jk2(x_k) on random connected components, optionally rotated

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import networkx as nx
import numpy as np

from src.core.functions import SampledFunction
from src.core.graphs import SparsityPattern, connected_components
from src.errors import InvalidInputError
from src.models import FunctionSpec, ProductTerm

from .factors import Factor, FactorKind, random_factor
from .matrices import haar_rotation
from .noise import noise_sampled_function

logger = logging.getLogger(__name__)

COMPONENT_SIZES = (2, 3, 4)
COEFFICIENT_RANGE = (5.0, 20.0)
PROTOCOL_DIMS = range(10, 16)


@dataclass(frozen=True)
class _Term:
    i: int
    j: int
    c: float
    g1: Factor
    g2: Factor

    @classmethod
    def from_model(cls, term: ProductTerm) -> "_Term":
        return cls(term.i, term.j, term.c, Factor.from_dict(term.g1), Factor.from_dict(term.g2))


def _has_curvature(g: Factor) -> bool:
    """Whether g'' is not identically zero."""
    return not (g.kind == FactorKind.SHIFT or (g.kind == FactorKind.POWER and g.t == 1))


def analytic_pattern(d: int, terms: Sequence[ProductTerm]) -> SparsityPattern:
    """Hessian support of the unrotated sum: term edges plus curved coordinates."""
    edges, diag = set(), set()
    for term in (_Term.from_model(t) for t in terms):
        if term.i != term.j:
            edges.add((term.i, term.j))
            if _has_curvature(term.g1):
                diag.add(term.i)
            if _has_curvature(term.g2):
                diag.add(term.j)
        else:
            diag.add(term.i)
    return SparsityPattern.from_edges(d, edges, diag)


def separable_function(
    d: int, terms: Sequence[ProductTerm], radius: float = 1.0, name: str = "f~"
) -> SampledFunction:
    """
    Sum of coefficient-weighted separable products with closed-form derivatives.

    Gradient and Hessian follow from the product rule applied to the factor
    derivatives; a term with i == j is the univariate c g1(x_i) g2(x_i).
    """
    parsed = [_Term.from_model(t) for t in terms]
    for term in parsed:
        if not (0 <= term.i < d and 0 <= term.j < d):
            raise InvalidInputError(f"Term indices ({term.i}, {term.j}) outside d={d}")

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for t in parsed:
            out = out + t.c * t.g1.evaluate(x[..., t.i])[0] * t.g2.evaluate(x[..., t.j])[0]
        return out

    def grad(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for t in parsed:
            a, a1, _ = t.g1.evaluate(x[..., t.i])
            b, b1, _ = t.g2.evaluate(x[..., t.j])
            out[..., t.i] += t.c * a1 * b
            out[..., t.j] += t.c * a * b1
        return out

    def hess(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape + (d,))
        for t in parsed:
            a, a1, a2 = t.g1.evaluate(x[..., t.i])
            b, b1, b2 = t.g2.evaluate(x[..., t.j])
            cross = t.c * a1 * b1
            out[..., t.i, t.i] += t.c * a2 * b
            out[..., t.j, t.j] += t.c * a * b2
            out[..., t.i, t.j] += cross
            out[..., t.j, t.i] += cross
        return out

    pattern = analytic_pattern(d, terms)
    truth = {
        "pattern": pattern,
        "components": connected_components(pattern).groups,
        "active": tuple(sorted({t.i for t in parsed} | {t.j for t in parsed})),
    }
    return SampledFunction(
        d=d, radius=radius, evaluate=evaluate, grad=grad, hess=hess, ground_truth=truth, name=name
    )


def partition_sizes(d: int, rng: np.random.Generator) -> List[int]:
    """Random component sizes in {2, 3, 4} summing to d."""
    if d < 2:
        raise InvalidInputError("A partition into components of size >= 2 needs d >= 2")
    sizes, remaining = [], d
    while remaining:
        valid = [s for s in COMPONENT_SIZES if remaining - s == 0 or remaining - s >= 2]
        size = int(rng.choice(valid))
        sizes.append(size)
        remaining -= size
    return sizes


def random_component_edges(group: Sequence[int], rng: np.random.Generator) -> List[Tuple[int, int]]:
    """
    Connected random edge set on a group.

    A random spanning tree guarantees connectivity; the total edge count is
    uniform between size-1 and size(size-1)/2.
    """
    group = list(group)
    s = len(group)
    order = [group[k] for k in rng.permutation(s)]
    tree = nx.Graph()
    tree.add_nodes_from(order)
    for k in range(1, s):
        tree.add_edge(order[int(rng.integers(k))], order[k])
    m = int(rng.integers(s - 1, s * (s - 1) // 2 + 1))
    complement = sorted(
        (min(a, b), max(a, b)) for a, b in nx.non_edges(tree)
    )
    extra = []
    if m > s - 1:
        picks = rng.choice(len(complement), m - (s - 1), replace=False)
        extra = [complement[k] for k in sorted(picks.tolist())]
    edges = sorted((min(a, b), max(a, b)) for a, b in tree.edges()) + extra
    return sorted(edges)


def random_function_spec(
    seed: int, d: int, noisy: bool = False, rotate: bool = True, radius: float = 1.0
) -> FunctionSpec:
    """Draw partition, edges, coefficients and factors from one seeded stream."""
    if d not in PROTOCOL_DIMS:
        logger.warning(f"d={d} is outside the experiment range 10..15")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(d).tolist()
    components, pos = [], 0
    for size in partition_sizes(d, rng):
        components.append(sorted(perm[pos : pos + size]))
        pos += size
    components.sort(key=lambda g: g[0])

    terms = []
    for group in components:
        for i, j in random_component_edges(group, rng):
            terms.append(
                ProductTerm(
                    i=i,
                    j=j,
                    c=float(rng.uniform(*COEFFICIENT_RANGE)),
                    g1=random_factor(rng).to_dict(),
                    g2=random_factor(rng).to_dict(),
                )
            )
    rotation_seed = int(rng.integers(0, 2**63 - 1)) if rotate else None
    return FunctionSpec(
        d=d,
        components=components,
        terms=terms,
        rotation_seed=rotation_seed,
        noisy=noisy,
        radius=radius,
        seed=seed,
    )


def build_function(spec: FunctionSpec, name: str = "f") -> SampledFunction:
    """
    Realize a spec: f = f~ o R (R Haar from rotation_seed), plus noise if flagged.

    The ground truth carries the unrotated pattern, the components and R;
    the sparsifying transform is U = R^T.
    """
    base = separable_function(spec.d, spec.terms, spec.radius, name=f"{name}~")
    truth: Dict[str, object] = dict(base.ground_truth)
    f = base
    if spec.rotation_seed is not None:
        R = haar_rotation(spec.d, np.random.default_rng(spec.rotation_seed))
        f = base.rotated(R, name=name)
        truth["R"] = R
    if spec.noisy:
        f = f.plus(noise_sampled_function(spec.d, spec.radius), name=f"{name}_n")
    truth["spec"] = spec
    return SampledFunction(
        d=f.d,
        radius=f.radius,
        evaluate=f.evaluate,
        grad=f.grad,
        hess=f.hess,
        domain=f.domain,
        ground_truth=truth,
        name=f.name,
    )


def gen_test_function(
    seed: int, d: int, noisy: bool = False, rotate: bool = True
) -> SampledFunction:
    """Random sparse additive test function with analytic derivatives."""
    spec = random_function_spec(seed, d, noisy=noisy, rotate=rotate)
    logger.info(
        f"Generated test function d={d}, seed={seed}: {len(spec.terms)} terms, "
        f"component sizes {[len(g) for g in spec.components]}"
    )
    return build_function(spec)
