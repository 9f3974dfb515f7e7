"""Deterministic SVG line charts of one trace column on a log10 scale."""
from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .io import CSV_COLUMNS, read_trace_csv

log = logging.getLogger(__name__)

LOG_FLOOR = 1e-300
WIDTH, HEIGHT = 640, 420
MARGIN = {"left": 70, "right": 170, "top": 30, "bottom": 50}
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _label_for(path: Path) -> str:
    """Legend text: the ``label`` of a sibling config.json if there is one, else the file stem."""
    cfg = path.parent / "config.json"
    if cfg.exists():
        try:
            label = json.loads(cfg.read_text()).get("label")
            if label:
                return str(label)
        except (OSError, ValueError):
            pass
    return path.stem


def render_svg(csv_paths, column: str, out_path, labels=None, title: str | None = None) -> Path:
    if column not in CSV_COLUMNS or column == "iter":
        raise ValueError(f"column must be one of {CSV_COLUMNS[1:]}, got {column!r}")
    paths = [Path(p) for p in csv_paths]
    if not paths:
        raise ValueError("at least one CSV is required")
    if labels is not None and len(labels) != len(paths):
        raise ValueError("one label per CSV is required")
    series = []
    for i, path in enumerate(paths):
        data = read_trace_csv(path)
        x, y = data["iter"], data[column]
        keep = ~np.isnan(y)
        x, y = x[keep], y[keep]
        bad = y <= 0.0
        if np.any(bad):
            log.warning("%s: %d nonpositive %s values clamped to %g", path, int(bad.sum()), column, LOG_FLOOR)
            y = np.where(bad, LOG_FLOOR, y)
        series.append((labels[i] if labels else _label_for(path), x, np.log10(y)))

    xs = np.concatenate([s[1] for s in series]) if series else np.empty(0)
    ys = np.concatenate([s[2] for s in series]) if series else np.empty(0)
    x_lo, x_hi = (0.0, 1.0) if xs.size == 0 else (float(xs.min()), float(xs.max()))
    y_lo, y_hi = (0.0, 1.0) if ys.size == 0 else (math.floor(ys.min()), math.ceil(ys.max()))
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(v):
        return MARGIN["left"] + (v - x_lo) / (x_hi - x_lo) * pw

    def py(v):
        return MARGIN["top"] + (y_hi - v) / (y_hi - y_lo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
           'fill="none" stroke="black"/>']
    step = max(1, int(math.ceil((y_hi - y_lo) / 10)))
    for e in range(int(y_lo), int(y_hi) + 1, step):
        y = py(e)
        out.append(f'<line x1="{MARGIN["left"]}" y1="{y:.2f}" x2="{MARGIN["left"] + pw}" y2="{y:.2f}" '
                   'stroke="#dddddd"/>')
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{y + 4:.2f}" font-size="11" text-anchor="end">1e{e}</text>')
    for v in np.linspace(x_lo, x_hi, 6):
        x = px(v)
        out.append(f'<text x="{x:.2f}" y="{MARGIN["top"] + ph + 16}" font-size="11" '
                   f'text-anchor="middle">{v:g}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.2f}" y="{HEIGHT - 10}" font-size="12" '
               'text-anchor="middle">iteration</text>')
    out.append(f'<text x="16" y="{MARGIN["top"] + ph / 2:.2f}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2:.2f})">{escape(column)}</text>')
    if title:
        out.append(f'<text x="{MARGIN["left"] + pw / 2:.2f}" y="18" font-size="13" '
                   f'text-anchor="middle">{escape(title)}</text>')
    for i, (label, x, y) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = MARGIN["top"] + 14 + 18 * i
        lx = MARGIN["left"] + pw + 10
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly}" font-size="11">{escape(label)}</text>')
    out.append("</svg>")
    out_path = Path(out_path)
    out_path.write_text("\n".join(out) + "\n")
    return out_path
