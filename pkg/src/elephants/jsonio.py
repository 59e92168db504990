"""Deterministic JSON output: sorted keys, NaN/inf rendered as null."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


def _clean(o):
    if isinstance(o, dict):
        return {str(k): _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    if isinstance(o, np.ndarray):
        return [_clean(v) for v in o.tolist()]
    if isinstance(o, (np.integer, np.bool_)):
        return o.item()
    if isinstance(o, (float, np.floating)):
        o = float(o)
        return o if math.isfinite(o) else None
    return o


def dumps(doc) -> str:
    return json.dumps(_clean(doc), sort_keys=True, indent=1) + "\n"


def dump(doc, path: str | Path | None) -> str:
    text = dumps(doc)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
