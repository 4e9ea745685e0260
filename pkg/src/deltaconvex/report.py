"""Structured, serialisable results of estimator and checker runs.

Reports are written as JSON with sorted keys so that a fixed config and seed
give byte-identical files. Exact rationals are written as ``"p/q"`` strings and
infinities as ``"inf"``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np

SCHEMA_VERSION = 1


def to_jsonable(x):
    if isinstance(x, Enum):
        return x.value
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else x.numerator
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return to_jsonable(x.tolist())
    if hasattr(x, "as_dict"):
        return to_jsonable(x.as_dict())
    return x


def digest(inputs):
    blob = json.dumps(to_jsonable(inputs), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class AnalysisReport:
    operation: str
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    passed: bool | None = None
    seed: int | None = None
    runtime: float | None = None

    def __getitem__(self, key):
        return self.outputs[key]

    def as_dict(self, include_runtime=False):
        d = {
            "schema": SCHEMA_VERSION,
            "operation": self.operation,
            "inputs": to_jsonable(self.inputs),
            "inputs_digest": digest(self.inputs),
            "outputs": to_jsonable(self.outputs),
            "tolerances": to_jsonable(self.tolerances),
            "passed": self.passed,
            "seed": self.seed,
        }
        if include_runtime and self.runtime is not None:
            d["runtime_s"] = round(self.runtime, 3)
        return d

    def to_json(self, include_runtime=False):
        return json.dumps(self.as_dict(include_runtime), sort_keys=True, indent=2) + "\n"

    def write(self, path, include_runtime=False):
        with open(path, "w") as fh:
            fh.write(self.to_json(include_runtime))


def write_diagnostics_csv(path, rows, columns=None):
    """Per-shell or per-node diagnostics as plot-ready CSV."""
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([_csv_cell(r.get(c)) for c in columns])


def _csv_cell(v):
    v = to_jsonable(v)
    return repr(v) if isinstance(v, float) else v
