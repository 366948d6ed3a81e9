# Univariate factors of the separable test functions
# x+t, x^t, cbrt(x^2+t^2), sin(tx), cos(tx), exp(-(x-t)^2) with exact derivatives

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Tuple

import numpy as np

from src.errors import InvalidInputError

PARAMETERS = (1, 2, 3)


class FactorKind(str, Enum):
    SHIFT = "shift"
    POWER = "power"
    CBRT = "cbrt"
    SIN = "sin"
    COS = "cos"
    GAUSS = "gauss"


@dataclass(frozen=True)
class Factor:
    """One member g of the factor catalogue, with parameter t in {1, 2, 3}."""

    kind: FactorKind
    t: int

    def __post_init__(self):
        object.__setattr__(self, "kind", FactorKind(self.kind))
        if self.t not in PARAMETERS:
            raise InvalidInputError(f"Factor parameter t must be in {PARAMETERS}, got {self.t}")

    def evaluate(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(g, g', g'') at x."""
        x = np.asarray(x, dtype=float)
        t = float(self.t)
        if self.kind == FactorKind.SHIFT:
            return x + t, np.ones_like(x), np.zeros_like(x)
        if self.kind == FactorKind.POWER:
            k = self.t
            first = k * x ** (k - 1)
            second = k * (k - 1) * x ** (k - 2) if k >= 2 else np.zeros_like(x)
            return x**k, first, second
        if self.kind == FactorKind.CBRT:
            q = x**2 + t**2
            value = np.cbrt(q)
            first = (2.0 * x / 3.0) * value / q
            second = (2.0 / 3.0) * value / q - (8.0 * x**2 / 9.0) * value / q**2
            return value, first, second
        if self.kind == FactorKind.SIN:
            return np.sin(t * x), t * np.cos(t * x), -(t**2) * np.sin(t * x)
        if self.kind == FactorKind.COS:
            return np.cos(t * x), -t * np.sin(t * x), -(t**2) * np.cos(t * x)
        e = np.exp(-((x - t) ** 2))
        return e, -2.0 * (x - t) * e, (4.0 * (x - t) ** 2 - 2.0) * e

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "t": self.t}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Factor":
        return cls(FactorKind(data["kind"]), int(data["t"]))

    def __str__(self) -> str:
        t = self.t
        return {
            FactorKind.SHIFT: f"x+{t}",
            FactorKind.POWER: f"x^{t}",
            FactorKind.CBRT: f"cbrt(x^2+{t * t})",
            FactorKind.SIN: f"sin({t}x)",
            FactorKind.COS: f"cos({t}x)",
            FactorKind.GAUSS: f"exp(-(x-{t})^2)",
        }[self.kind]


CATALOGUE = tuple(Factor(kind, t) for kind in FactorKind for t in PARAMETERS)


def random_factor(rng: np.random.Generator) -> Factor:
    return CATALOGUE[int(rng.integers(len(CATALOGUE)))]
