"""On-disk document format for metric measure spaces and result reports.

A space document is a single JSON object with keys name / labels / dist /
mass; the matrix is always full (never triangular), numbers are plain decimal
literals.  Canonical serialization (sorted keys, fixed separators, repr
floats) round-trips bit-exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import MetricSpace, MMSpace
from .errors import ValidationError


def space_to_document(x: MMSpace, name: str) -> dict:
    labels = x.space.labels or tuple(f"p{i}" for i in range(x.n))
    return {
        "name": name,
        "labels": list(labels),
        "dist": [[float(v) for v in row] for row in np.asarray(x.dist)],
        "mass": [float(v) for v in np.asarray(x.mass)],
    }


def space_from_document(doc: dict) -> MMSpace:
    if not isinstance(doc, dict):
        raise ValidationError("space document must be a JSON object")
    missing = {"name", "labels", "dist", "mass"} - doc.keys()
    if missing:
        raise ValidationError(f"space document misses keys: {sorted(missing)}")
    try:
        dist = np.array(doc["dist"], dtype=float)
        mass = np.array(doc["mass"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"space document holds non-numeric data: {exc}") from None
    space = MetricSpace(dist, labels=tuple(str(s) for s in doc["labels"]))
    return MMSpace(space, mass)


def dumps_document(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ": "), indent=1)


def loads_document(text: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}") from None


def load_space(path: str | Path) -> MMSpace:
    return space_from_document(loads_document(Path(path).read_text(encoding="utf-8")))


def save_space(x: MMSpace, name: str, path: str | Path) -> None:
    Path(path).write_text(dumps_document(space_to_document(x, name)) + "\n",
                          encoding="utf-8")
