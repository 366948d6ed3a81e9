# JSON codecs for domain objects
# Index sets are 1-based on disk and 0-based in memory; matrices are row-major lists

from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from src.core.graphs import SparsityPattern
from src.errors import InvalidInputError
from src.models import FunctionSpec, MatrixInstanceSpec, ProductTerm
from src.sparsify.block_diag import BlockDiagResult
from src.sparsify.metrics import GroundTruth
from src.sparsify.pipeline import FunctionSamples
from src.testgen.matrices import MatrixInstance

FORMAT_VERSION = 1


def _one_based(indices) -> List[int]:
    return [int(i) + 1 for i in indices]


def _zero_based(indices, d: Optional[int] = None) -> List[int]:
    out = [int(i) - 1 for i in indices]
    if d is not None and any(not 0 <= i < d for i in out):
        raise InvalidInputError(f"1-based indices {list(indices)} outside 1..{d}")
    return out


def _matrix(value, name: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"Field '{name}' is not numeric") from exc
    return arr


def _require(payload: Dict[str, Any], *keys: str) -> None:
    missing = [k for k in keys if k not in payload]
    if missing:
        raise InvalidInputError(f"Missing field(s) {missing}")


# ==================== Patterns and matrices ====================


def pattern_to_json(p: SparsityPattern) -> Dict[str, Any]:
    return {
        "d": p.d,
        "off_diag": [_one_based(pair) for pair in sorted(p.off_diag)],
        "diag": _one_based(sorted(p.diag)),
    }


def pattern_from_json(payload: Dict[str, Any]) -> SparsityPattern:
    _require(payload, "d")
    d = int(payload["d"])
    edges = [_zero_based(pair, d) for pair in payload.get("off_diag", [])]
    return SparsityPattern.from_edges(d, edges, _zero_based(payload.get("diag", []), d))


def matrix_set_to_json(mats) -> Dict[str, Any]:
    arr = np.asarray(mats, dtype=float)
    return {"N": int(arr.shape[0]), "d": int(arr.shape[1]), "matrices": arr.tolist()}


def matrix_set_from_json(payload: Dict[str, Any]) -> np.ndarray:
    _require(payload, "matrices")
    arr = _matrix(payload["matrices"], "matrices")
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise InvalidInputError(f"Matrix set of shape {arr.shape} is not a stack of square matrices")
    return arr


def gradient_sample_to_json(samples: FunctionSamples) -> Dict[str, Any]:
    out: Dict[str, Any] = {"N": samples.N, "d": samples.d, "hessians": samples.hessians.tolist()}
    if samples.gradients is not None:
        out["gradients"] = samples.gradients.tolist()
    if samples.points is not None:
        out["points"] = samples.points.tolist()
    return out


def gradient_sample_from_json(payload: Dict[str, Any]) -> FunctionSamples:
    _require(payload, "hessians")
    gradients = payload.get("gradients")
    points = payload.get("points")
    return FunctionSamples(
        _matrix(payload["hessians"], "hessians"),
        None if gradients is None else _matrix(gradients, "gradients"),
        None if points is None else _matrix(points, "points"),
    )


def block_result_to_json(result: BlockDiagResult) -> Dict[str, Any]:
    return {
        "U": result.U.tolist(),
        "groups": [_one_based(g) for g in result.structure.groups],
        "permutation": _one_based(result.structure.permutation),
        "profile": list(result.profile),
        "off_block_residual": result.off_block_residual,
        "eigenvalues": result.eigenvalues.tolist(),
    }


# ==================== Generated instances ====================


def matrix_spec_to_json(spec: MatrixInstanceSpec) -> Dict[str, Any]:
    payload = spec.model_dump(mode="json")
    payload["off_diag"] = [_one_based(pair) for pair in spec.off_diag]
    payload["diag"] = _one_based(spec.diag)
    return payload


def matrix_spec_from_json(payload: Dict[str, Any]) -> MatrixInstanceSpec:
    data = dict(payload)
    _require(data, "d")
    data["off_diag"] = [tuple(_zero_based(pair)) for pair in data.get("off_diag", [])]
    data["diag"] = _zero_based(data.get("diag", []))
    try:
        return MatrixInstanceSpec(**data)
    except ValueError as exc:
        raise InvalidInputError(f"Invalid matrix instance spec: {exc}") from exc


def instance_to_json(instance: MatrixInstance) -> Dict[str, Any]:
    payload: Dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "kind": "matrix_set",
        "noisy": instance.spec.sigma > 0,
        "spec": matrix_spec_to_json(instance.spec),
        "samples": {"hessians": instance.mats.tolist()},
        "truth": {"pattern": pattern_to_json(instance.pattern), "R": instance.R.tolist()},
    }
    if instance.clean is not None:
        payload["clean"] = matrix_set_to_json(instance.clean)
    return payload


def function_spec_to_json(spec: FunctionSpec) -> Dict[str, Any]:
    payload = spec.model_dump(mode="json")
    payload["components"] = [_one_based(g) for g in spec.components]
    for term in payload["terms"]:
        term["i"] += 1
        term["j"] += 1
    return payload


def function_spec_from_json(payload: Dict[str, Any]) -> FunctionSpec:
    data = dict(payload)
    _require(data, "d", "components", "terms")
    data["components"] = [_zero_based(g) for g in data["components"]]
    data["terms"] = [
        ProductTerm(**{**term, "i": int(term["i"]) - 1, "j": int(term["j"]) - 1})
        for term in data["terms"]
    ]
    try:
        return FunctionSpec(**data)
    except ValueError as exc:
        raise InvalidInputError(f"Invalid function spec: {exc}") from exc


def function_instance_to_json(
    description: Dict[str, Any],
    samples: FunctionSamples,
    pattern: SparsityPattern,
    R: Optional[np.ndarray] = None,
    noisy: bool = False,
) -> Dict[str, Any]:
    """Sampled function file: description, samples and the unrotated truth."""
    truth: Dict[str, Any] = {"pattern": pattern_to_json(pattern)}
    if R is not None:
        truth["R"] = np.asarray(R).tolist()
    return {
        "format_version": FORMAT_VERSION,
        "kind": "function",
        "noisy": noisy,
        "function": description,
        "samples": gradient_sample_to_json(samples),
        "truth": truth,
    }


@dataclass
class LoadedInstance:
    """An instance file decoded for the pipeline"""

    kind: str
    samples: FunctionSamples
    truth: Optional[GroundTruth] = None
    clean: Optional[np.ndarray] = None
    noisy: bool = False


def load_instance(payload: Dict[str, Any]) -> LoadedInstance:
    """
    Decode an instance written by `gen`, or a bare {"hessians", "gradients"} file.

    Raises:
        InvalidInputError: on schema mismatch
    """
    if not isinstance(payload, dict):
        raise InvalidInputError("Instance file must hold a JSON object")
    kind = payload.get("kind", "samples")
    samples_payload = payload.get("samples", payload)
    samples = gradient_sample_from_json(samples_payload)

    truth = None
    if "truth" in payload:
        t = payload["truth"]
        _require(t, "pattern")
        R = t.get("R")
        U = None if R is None else _matrix(R, "R").T
        if kind == "function" and U is None:
            U = np.eye(samples.d)
        truth = GroundTruth(pattern_from_json(t["pattern"]), U)

    clean = matrix_set_from_json(payload["clean"]) if "clean" in payload else None
    noisy = payload.get("noisy", False)
    if not isinstance(noisy, bool):
        raise InvalidInputError(f"'noisy' must be true or false, got {noisy!r}")
    return LoadedInstance(kind, samples, truth, clean, noisy)
