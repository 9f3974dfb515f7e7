"""Trace CSV files and reference-solution JSON files.

The CSV header line doubles as the schema version: readers accept only the
headers listed in ``KNOWN_HEADERS``. Floats are written with 17 significant
digits so binary64 values round-trip exactly; missing values are empty.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CSV_COLUMNS = ("iter", "primal_err", "dual_err", "feasibility", "dual_gap", "dfsym", "wall_ms")
CSV_HEADER = ",".join(CSV_COLUMNS)
KNOWN_HEADERS = {CSV_HEADER: 1}

REFERENCE_FORMAT = "hoalm-reference/1"


class TraceFormatError(ValueError):
    """Malformed or unsupported trace CSV."""


class ReferenceIntegrityError(ValueError):
    """Reference file unreadable, tampered with, or for another problem."""


def fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    return "" if math.isnan(x) else f"{x:.17g}"


def trace_rows(trace) -> list[tuple]:
    """Rows of an ``AlmTrace`` in CSV column order."""
    return [(row.iteration, row.primal_err, row.dual_err, row.feasibility, row.dual_gap, row.dfsym, row.wall_ms)
            for row in trace.rows]


def write_trace_csv(path, rows) -> Path:
    path = Path(path)
    lines = [CSV_HEADER]
    for row in rows:
        if len(row) != len(CSV_COLUMNS):
            raise ValueError(f"row has {len(row)} fields, expected {len(CSV_COLUMNS)}")
        lines.append(",".join([str(int(row[0]))] + [fmt(x) for x in row[1:]]))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_trace_csv(path) -> dict[str, np.ndarray]:
    """Columns of a trace CSV as float arrays (NaN for empty fields)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise TraceFormatError(f"{path}: cannot read ({exc})") from exc
    lines = text.splitlines()
    if not lines:
        raise TraceFormatError(f"{path}:1: empty file")
    header = lines[0].strip()
    if header not in KNOWN_HEADERS:
        raise TraceFormatError(f"{path}:1: unknown header {header!r}")
    names = header.split(",")
    cols: list[list[float]] = [[] for _ in names]
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(names):
            raise TraceFormatError(f"{path}:{lineno}: expected {len(names)} fields, found {len(parts)}")
        for j, part in enumerate(parts):
            try:
                cols[j].append(float(part) if part.strip() else math.nan)
            except ValueError:
                raise TraceFormatError(f"{path}:{lineno}: bad number {part!r} in column {names[j]}") from None
    if not cols[0]:
        raise TraceFormatError(f"{path}:2: no data rows")
    return {name: np.array(c) for name, c in zip(names, cols)}


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def fingerprint(problem_spec: dict) -> str:
    return hashlib.sha256(canonical_json(problem_spec).encode()).hexdigest()


def _dump(obj, indent=0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent + 2)
    if isinstance(obj, dict):
        items = [f"{pad}{json.dumps(str(k))}: {_dump(v, indent + 2)}" for k, v in sorted(obj.items())]
        return "{\n" + ",\n".join(items) + "\n" + " " * indent + "}" if items else "{}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_dump(v, indent) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise ValueError("non-finite value in reference data")
        return f"{x:.17g}" if (x != int(x) or abs(x) >= 1e16) else f"{x:.1f}"
    if obj is None:
        return "null"
    return json.dumps(obj)


@dataclass
class ReferenceSolution:
    fingerprint: str
    problem: dict
    u: np.ndarray
    lam: np.ndarray
    protocol: dict

    def payload(self) -> dict:
        return {"format": REFERENCE_FORMAT, "fingerprint": self.fingerprint, "problem": self.problem,
                "protocol": self.protocol, "u": [float(x) for x in self.u],
                "lam": [float(x) for x in self.lam]}


def _checksum(payload: dict) -> str:
    return hashlib.sha256(canonical_json(payload).encode()).hexdigest()


def save_reference(path, ref: ReferenceSolution) -> Path:
    path = Path(path)
    payload = ref.payload()
    # the checksum covers the values as they will be parsed back
    doc = dict(json.loads(_dump(payload)))
    doc["checksum"] = _checksum(doc)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(_dump(doc) + "\n")
    tmp.replace(path)
    return path


def load_reference(path, expected_fingerprint: str | None = None) -> ReferenceSolution:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ReferenceIntegrityError(f"{path}: unreadable reference ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("format") != REFERENCE_FORMAT:
        raise ReferenceIntegrityError(f"{path}: not a reference file of format {REFERENCE_FORMAT}")
    stored = doc.pop("checksum", None)
    if stored != _checksum(doc):
        raise ReferenceIntegrityError(f"{path}: checksum mismatch")
    if doc["fingerprint"] != fingerprint(doc["problem"]):
        raise ReferenceIntegrityError(f"{path}: fingerprint does not match stored problem spec")
    if expected_fingerprint is not None and doc["fingerprint"] != expected_fingerprint:
        raise ReferenceIntegrityError(f"{path}: reference belongs to another problem")
    return ReferenceSolution(doc["fingerprint"], doc["problem"], np.array(doc["u"], dtype=float),
                             np.array(doc["lam"], dtype=float), doc["protocol"])
