# Artifact Storage for SPARSEADD
# Handles JSON and CSV persistence of instances, reports and trajectories

import json
import logging
import math
import os
import re
from typing import Any, Dict, Iterable, List, Optional

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_DIGITS = 17
_FLOAT_MARK = "@@float:"
_FLOAT_PATTERN = re.compile(r'"' + re.escape(_FLOAT_MARK) + r'([^"]+)"')


def format_float(value: float) -> str:
    """Fixed 17-significant-digit rendering (round-trips every double)."""
    return format(float(value), f".{FLOAT_DIGITS}g")


def _prepare(obj: Any) -> Any:
    """Convert numpy containers and mark floats for fixed formatting."""
    if isinstance(obj, dict):
        return {str(k): _prepare(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_prepare(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _prepare(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(float(obj)):
            return None
        return _FLOAT_MARK + format_float(obj)
    if hasattr(obj, "model_dump"):
        return _prepare(obj.model_dump(mode="json"))
    return obj


def dumps(obj: Any) -> str:
    """Deterministic JSON text: sorted keys, 2-space indent, 17-digit floats."""
    text = json.dumps(_prepare(obj), indent=2, sort_keys=True)
    return _FLOAT_PATTERN.sub(r"\1", text)


class ArtifactStore:
    """
    File-based store for experiment artifacts.

    Every artifact lives under `storage_path`; relative names are resolved
    against it and absolute paths are used as given.
    """

    def __init__(self, storage_path: str = "data/sparseadd"):
        """
        Initialize the artifact store.

        Args:
            storage_path: Directory path for storing artifacts
        """
        self.storage_path = os.path.abspath(storage_path)
        os.makedirs(self.storage_path, exist_ok=True)
        logger.debug(f"Initialized artifact store at {storage_path}")

    def path_for(self, name: str) -> str:
        path = name if os.path.isabs(name) else os.path.join(self.storage_path, name)
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        return path

    def save_json(self, name: str, payload: Any) -> str:
        """Write a JSON artifact and return its path."""
        path = self.path_for(name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(dumps(payload))
            fh.write("\n")
        logger.debug(f"Saved JSON artifact {path}")
        return path

    def load_json(self, name: str) -> Dict[str, Any]:
        """
        Read a JSON artifact.

        Raises:
            FileNotFoundError: if the artifact does not exist
        """
        path = name if os.path.isabs(name) or os.path.exists(name) else self.path_for(name)
        if not os.path.exists(path):
            raise FileNotFoundError(f"Artifact not found: {path}")
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)

    def save_csv(
        self, name: str, rows: Iterable[Dict[str, Any]], columns: Optional[List[str]] = None
    ) -> str:
        """Write tidy rows as CSV with 17-digit floats."""
        path = self.path_for(name)
        frame = pd.DataFrame(list(rows), columns=columns)
        frame.to_csv(path, index=False, float_format=f"%.{FLOAT_DIGITS}g")
        logger.debug(f"Saved CSV artifact {path} ({len(frame)} rows)")
        return path
