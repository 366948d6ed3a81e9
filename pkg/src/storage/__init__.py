# Storage Package for SPARSEADD
# JSON / CSV persistence of instances, reports and trajectories

import os
from typing import Optional

import config

from .base import ArtifactStore, dumps, format_float
from .codecs import (
    LoadedInstance,
    block_result_to_json,
    function_instance_to_json,
    function_spec_from_json,
    function_spec_to_json,
    gradient_sample_from_json,
    gradient_sample_to_json,
    instance_to_json,
    load_instance,
    matrix_set_from_json,
    matrix_set_to_json,
    matrix_spec_from_json,
    matrix_spec_to_json,
    pattern_from_json,
    pattern_to_json,
)

# Shared store instance
_shared_store: Optional[ArtifactStore] = None


def get_store() -> ArtifactStore:
    """
    Get or create the shared artifact store.

    Uses SPARSEADD_STORAGE_PATH (through config) to select the directory.
    """
    global _shared_store
    if _shared_store is None:
        _shared_store = ArtifactStore(os.environ.get("SPARSEADD_STORAGE_PATH", config.STORAGE_PATH))
    return _shared_store


def reset_store() -> None:
    """Reset the shared store (useful for testing)."""
    global _shared_store
    _shared_store = None


__all__ = [
    "ArtifactStore",
    "dumps",
    "format_float",
    "get_store",
    "reset_store",
    "LoadedInstance",
    "block_result_to_json",
    "function_instance_to_json",
    "function_spec_from_json",
    "function_spec_to_json",
    "gradient_sample_from_json",
    "gradient_sample_to_json",
    "instance_to_json",
    "load_instance",
    "matrix_set_from_json",
    "matrix_set_to_json",
    "matrix_spec_from_json",
    "matrix_spec_to_json",
    "pattern_from_json",
    "pattern_to_json",
]
