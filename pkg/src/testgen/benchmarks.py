# Built-in 7-dimensional benchmarks
# f~1 and f~2 with their component sets, rotated and noisy variants

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from src.core.functions import SampledFunction
from src.errors import InvalidInputError
from src.models import ProductTerm

from .factors import Factor, FactorKind
from .functions import separable_function
from .matrices import haar_rotation
from .noise import noise_sampled_function

logger = logging.getLogger(__name__)

BENCHMARK_DIM = 7


def _term(i: int, j: int, c: float, g1: Factor, g2: Factor) -> ProductTerm:
    return ProductTerm(i=i, j=j, c=c, g1=g1.to_dict(), g2=g2.to_dict())


# 5 exp(-(x1-1)^2)(x4+1) + 7 sin(2 x1) x7^3 + 10 cos(2 x2)(x5+3)
F1_TERMS = (
    _term(0, 3, 5.0, Factor(FactorKind.GAUSS, 1), Factor(FactorKind.SHIFT, 1)),
    _term(0, 6, 7.0, Factor(FactorKind.SIN, 2), Factor(FactorKind.POWER, 3)),
    _term(1, 4, 10.0, Factor(FactorKind.COS, 2), Factor(FactorKind.SHIFT, 3)),
)

# 5 exp(-(x1-1)^2) cos(3 x4) + 10 x1 x7^3 + 8 sin(x2) cos(x7)
#   + 12 cos(2 x3) sin(3 x5) + 6 x5 x6
F2_TERMS = (
    _term(0, 3, 5.0, Factor(FactorKind.GAUSS, 1), Factor(FactorKind.COS, 3)),
    _term(0, 6, 10.0, Factor(FactorKind.POWER, 1), Factor(FactorKind.POWER, 3)),
    _term(1, 6, 8.0, Factor(FactorKind.SIN, 1), Factor(FactorKind.COS, 1)),
    _term(2, 4, 12.0, Factor(FactorKind.COS, 2), Factor(FactorKind.SIN, 3)),
    _term(4, 5, 6.0, Factor(FactorKind.POWER, 1), Factor(FactorKind.POWER, 1)),
)


@dataclass(frozen=True)
class Benchmark:
    """A built-in function with its component set and expected smallness counts"""

    name: str
    function: SampledFunction
    base: SampledFunction
    components: Tuple[Tuple[int, ...], ...]
    expected_counts: Tuple[int, int]
    R: Optional[np.ndarray] = None
    metadata: Dict[str, object] = field(default_factory=dict)


_DEFINITIONS = {
    "f1": (F1_TERMS, ((0, 3, 6), (1, 4)), (2, 18)),
    "f2": (F2_TERMS, ((0, 1, 3, 6), (2, 4, 5)), (0, 16)),
}


def builtin_benchmark(
    which: str,
    rotate: bool = False,
    noisy: bool = False,
    seed: Optional[int] = None,
    radius: float = 1.0,
) -> Benchmark:
    """
    One of the built-in benchmarks.

    With `rotate`, f = f~ o R for a Haar R drawn from `seed`; with `noisy`
    the Gaussian-mixture noise is added on top.
    """
    if which not in _DEFINITIONS:
        raise InvalidInputError(f"Unknown benchmark {which!r}; choose from {sorted(_DEFINITIONS)}")
    terms, components, counts = _DEFINITIONS[which]
    base = separable_function(BENCHMARK_DIM, terms, radius, name=f"{which}~")
    f, R = base, None
    if rotate:
        R = haar_rotation(BENCHMARK_DIM, np.random.default_rng(seed))
        f = base.rotated(R, name=which)
    if noisy:
        f = f.plus(noise_sampled_function(BENCHMARK_DIM, radius), name=f"{f.name}_n")
    truth = dict(base.ground_truth)
    if R is not None:
        truth["R"] = R
    f = SampledFunction(
        d=f.d,
        radius=f.radius,
        evaluate=f.evaluate,
        grad=f.grad,
        hess=f.hess,
        domain=f.domain,
        ground_truth=truth,
        name=f.name,
    )
    logger.debug(f"Built benchmark {f.name} (rotate={rotate}, noisy={noisy}, seed={seed})")
    return Benchmark(
        name=f.name,
        function=f,
        base=base,
        components=components,
        expected_counts=counts,
        R=R,
        metadata={"which": which, "rotate": rotate, "noisy": noisy, "seed": seed},
    )


def builtin_benchmarks(
    rotate: bool = False, noisy: bool = False, seed: Optional[int] = None
) -> Dict[str, Benchmark]:
    """Both benchmarks; rotated variants use seed and seed + 1."""
    out = {}
    for k, which in enumerate(sorted(_DEFINITIONS)):
        sub_seed = None if seed is None else seed + k
        out[which] = builtin_benchmark(which, rotate=rotate, noisy=noisy, seed=sub_seed)
    return out
