"""CSV time series and JSON summaries for runs."""
from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path

import numpy as np

from .diagnostics import columns, from_row, to_row
from .scenario import SCHEMA_VERSION

OUTPUT_ENV = "IONBOUND_OUTPUT_ROOT"


def output_root(default="runs"):
    return Path(os.environ.get(OUTPUT_ENV, default))


def _fmt(v):
    return repr(float(v))


def write_records_csv(path, records, certificate=None):
    R_values = records[0].R_values
    cols = columns(R_values)
    avg = marg = None
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for i, rec in enumerate(records):
            if certificate is not None:
                avg = [p.avg_M[i] for p in certificate.per_R]
                marg = [p.margins[i] for p in certificate.per_R]
            w.writerow({k: _fmt(v) for k, v in to_row(rec, avg, marg).items()})


def read_records_csv(path):
    """Records plus the per-R averaged moments and certificate margins."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        header = reader.fieldnames
    R_values = [float(c[2:]) for c in header if c.startswith("M_")]
    records = [from_row(row, R_values) for row in rows]
    extra = {
        "avgM": np.array([[float(row[f"avgM_{R:g}"]) for R in R_values] for row in rows]),
        "cert_margin": np.array([[float(row[f"cert_margin_{R:g}"]) for R in R_values] for row in rows]),
    }
    return records, extra


def _clean(obj):
    """JSON-safe copy: numpy scalars to floats, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(_clean({"schema_version": SCHEMA_VERSION, **doc}), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)
