# Run manifests and configuration loading for the CLI

import hashlib
import json
import logging
import os
from typing import Any, Dict, Iterable, List, Mapping, Optional

from src.errors import InvalidInputError
from src.models import PipelineConfig, RunManifest

logger = logging.getLogger(__name__)


def _set_path(target: Dict[str, Any], dotted: str, value: Any) -> None:
    node = target
    parts = dotted.split(".")
    for part in parts[:-1]:
        child = node.get(part)
        if not isinstance(child, dict):
            child = {}
            node[part] = child
        node = child
    node[parts[-1]] = value


def _merge(base: Dict[str, Any], update: Mapping[str, Any]) -> Dict[str, Any]:
    for key, value in update.items():
        if isinstance(value, Mapping) and isinstance(base.get(key), dict):
            _merge(base[key], value)
        else:
            base[key] = value
    return base


def load_pipeline_config(
    path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None
) -> PipelineConfig:
    """
    Build a PipelineConfig: flags override the JSON file, which overrides defaults.

    `overrides` maps dotted field paths (e.g. "optimizer.method") to values;
    None values are ignored. Only fields given by the file or a flag count
    as explicitly set.

    Raises:
        FileNotFoundError: if the config file does not exist
        InvalidInputError: if the merged configuration does not validate
    """
    data: Dict[str, Any] = {}
    if path:
        if not os.path.exists(path):
            raise FileNotFoundError(f"Config file not found: {path}")
        with open(path, "r", encoding="utf-8") as fh:
            try:
                loaded = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InvalidInputError(f"Config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise InvalidInputError(f"Config file {path} must hold a JSON object")
        _merge(data, loaded)
    for dotted, value in (overrides or {}).items():
        if value is not None:
            _set_path(data, dotted, value)
    try:
        cfg = PipelineConfig.model_validate(data)
    except ValueError as exc:
        raise InvalidInputError(f"Invalid pipeline configuration: {exc}") from exc
    logger.debug(f"Pipeline configuration {cfg.config_hash()[:12]}: {data}")
    return cfg


def build_manifest(
    command: str,
    config_payload: Any,
    seeds: Mapping[str, int],
    inputs: Iterable[str] = (),
    outputs: Iterable[str] = (),
    timings: Optional[Mapping[str, float]] = None,
) -> RunManifest:
    """Provenance record; the hash covers the canonical JSON of the configuration."""
    if isinstance(config_payload, PipelineConfig):
        config_hash = config_payload.config_hash()
    else:
        canonical = json.dumps(config_payload, sort_keys=True, default=str)
        config_hash = hashlib.sha256(canonical.encode("utf-8")).hexdigest()
    return RunManifest(
        command=command,
        config_hash=config_hash,
        seeds=dict(seeds),
        inputs=list(inputs),
        outputs=list(outputs),
        timings=dict(timings or {}),
    )


def parse_float_list(text: Optional[str]) -> Optional[List[float]]:
    """'1e-9,1e-4' -> [1e-9, 1e-4]."""
    if text is None:
        return None
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise InvalidInputError(f"Cannot parse number list {text!r}") from exc
