"""Canonical JSON rendering shared by the CLI and the HTTP service.

All floats are pre-rounded to 9 significant digits and keys are sorted, so
identical inputs produce byte-identical output regardless of entry point.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

__all__ = ["canonical_dumps", "canonical_bytes"]


def _canonize(obj: Any) -> Any:
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, (int, str)) or obj is None:
        return obj
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite value {obj!r} cannot be serialized")
        return float(f"{obj:.9g}")
    if isinstance(obj, np.generic):
        return _canonize(obj.item())
    if isinstance(obj, np.ndarray):
        return [_canonize(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        out = {}
        for key, value in obj.items():
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {key!r}")
            out[key] = _canonize(value)
        return out
    if isinstance(obj, (list, tuple)):
        return [_canonize(x) for x in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__} canonically")


def canonical_dumps(obj: Any) -> str:
    return json.dumps(_canonize(obj), sort_keys=True, separators=(",", ":"))


def canonical_bytes(obj: Any) -> bytes:
    return canonical_dumps(obj).encode("utf-8")
