"""On-disk formats: time-series CSV, JSON snapshots and run summaries."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..basis import SpectralCoeffs
from ..diagnostics import CSV_COLUMNS, DiagnosticsRecord
from ..dynamics import PhysParams, State
from ..errors import InputError

SNAPSHOT_VERSION = 1


def write_timeseries(records, path) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for rec in records:
            w.writerow(rec.as_row())


def read_timeseries(path) -> list[DiagnosticsRecord]:
    out = []
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise InputError(f"{path}: unexpected columns {reader.fieldnames}")
        for row in reader:
            vals = {k: (None if row[k] == "" else float(row[k])) for k in CSV_COLUMNS}
            out.append(DiagnosticsRecord(**vals))
    return out


def write_snapshot(state: State, phys: PhysParams, eps: float, path) -> None:
    doc = {
        "version": SNAPSHOT_VERSION,
        "n": state.n,
        "L": state.L,
        "A": phys.A,
        "B": phys.B,
        "eps": float(eps),
        "t": float(state.t),
        "f_coeffs": [float(v) for v in state.f.coeffs],
        "g_coeffs": [float(v) for v in state.g.coeffs],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="ascii")


def read_snapshot(path):
    """Return ``(state, phys, eps)`` from a snapshot file."""
    doc = json.loads(Path(path).read_text(encoding="ascii"))
    if doc.get("version") != SNAPSHOT_VERSION:
        raise InputError(f"{path}: unsupported snapshot version {doc.get('version')}")
    L = doc["L"]
    f = SpectralCoeffs(np.array(doc["f_coeffs"]), L)
    g = SpectralCoeffs(np.array(doc["g_coeffs"]), L)
    if f.n != doc["n"]:
        raise InputError(f"{path}: coefficient count does not match n={doc['n']}")
    return State(f, g, doc["t"]), PhysParams(doc["A"], doc["B"], L), doc["eps"]


def write_json(doc, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n", encoding="ascii")


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")
