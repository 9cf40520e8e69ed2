"""CSV tables and SVG convergence plots for MSE trajectories."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from .errors import DimensionError

__all__ = ["format_value", "write_csv", "read_csv", "render_svg"]

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def format_value(v):
    """Positional decimal with 12 significant digits; platform independent."""
    if not math.isfinite(v):
        return ""
    return np.format_float_positional(float(v), precision=12, unique=False,
                                      fractional=False, trim="-")


def _common_length(trajectories):
    if not trajectories:
        raise DimensionError("no trajectories to write")
    lengths = {t.per_iteration_mse.size for t in trajectories if not t.all_diverged}
    if len(lengths) > 1:
        raise DimensionError(f"trajectories have unequal lengths {sorted(lengths)}")
    return lengths.pop() if lengths else 0


def write_csv(trajectories, path):
    """
    Write ``iteration,<label>_mse,<label>_mse_db,...`` rows, one per iteration.

    Iterations are numbered from 1 (MSE after the first update). Algorithms
    whose trials all diverged get empty cells.
    """
    length = _common_length(trajectories)
    header = ["iteration"]
    for t in trajectories:
        header += [f"{t.algorithm_label}_mse", f"{t.algorithm_label}_mse_db"]
    lines = [",".join(header)]
    cols = []
    for t in trajectories:
        if t.all_diverged:
            cols += [[""] * length] * 2
        else:
            cols.append([format_value(v) for v in t.per_iteration_mse])
            cols.append([format_value(v) for v in t.per_iteration_mse_db])
    for k in range(length):
        lines.append(",".join([str(k + 1)] + [c[k] for c in cols]))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def read_csv(path):
    """Parse a file written by :func:`write_csv` into ``{label: mse array}``."""
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n").split(",")
        rows = [line.rstrip("\n").split(",") for line in f if line.strip()]
    out = {}
    for i, name in enumerate(header):
        if name.endswith("_mse"):
            cells = [r[i] for r in rows]
            out[name[: -len("_mse")]] = np.array(
                [float(c) for c in cells] if all(cells) else [], dtype=float)
    return out


def _nice_ticks(lo, hi, count=8):
    span = hi - lo
    raw = span / max(1, count - 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-9 * span:
        ticks.append(round(v, 10))
        v += step
    return ticks


def render_svg(trajectories, path, db_scale=True, title="Average MSE"):
    """
    Write a standalone SVG line chart, one polyline per trajectory.

    The x-axis is the iteration index, the y-axis the MSE in dB
    (``10 log10``) or linear scale.
    """
    if not trajectories:
        raise DimensionError("at least one trajectory is required")
    width, height = 800, 500
    left, right, top, bottom = 70, 180, 40, 55
    pw, ph = width - left - right, height - top - bottom

    series = []
    for t in trajectories:
        if t.all_diverged:
            series.append((t.algorithm_label, None))
            continue
        ys = t.per_iteration_mse_db if db_scale else t.per_iteration_mse
        series.append((t.algorithm_label, np.asarray(ys, dtype=float)))
    finite = [s for _, s in series if s is not None]
    if finite:
        ymin = min(float(np.min(s)) for s in finite)
        ymax = max(float(np.max(s)) for s in finite)
        xmax = max(s.size for s in finite)
    else:
        ymin, ymax, xmax = 0.0, 1.0, 1
    if ymax - ymin < 1e-9:
        ymin, ymax = ymin - 1.0, ymax + 1.0
    xmin = 1
    if xmax <= xmin:
        xmax = xmin + 1

    def sx(v):
        return left + (v - xmin) / (xmax - xmin) * pw

    def sy(v):
        return top + (ymax - v) / (ymax - ymin) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + pw / 2:.1f}" y="22" text-anchor="middle" font-size="15">'
        f'{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for v in _nice_ticks(ymin, ymax):
        y = sy(v)
        out.append(f'<line class="ytick" x1="{left - 5}" y1="{y:.2f}" x2="{left + pw}" '
                   f'y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end">{v:g}</text>')
    for v in _nice_ticks(xmin, xmax):
        x = sx(v)
        out.append(f'<line class="xtick" x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" '
                   f'y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{top + ph + 18}" text-anchor="middle">{v:g}</text>')
    ylabel = "Average MSE (dB)" if db_scale else "Average MSE"
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">'
               'Iterations</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.1f})">{ylabel}</text>')

    for i, (label, ys) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        ly = top + 16 + 20 * i
        lx = left + pw + 15
        name = escape(label) + (" (diverged)" if ys is None else "")
        out.append(f'<g class="legend-entry"><line x1="{lx}" y1="{ly - 4}" x2="{lx + 25}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>'
                   f'<text x="{lx + 32}" y="{ly}">{name}</text></g>')
        if ys is None:
            continue
        pts = " ".join(f"{sx(k + 1):.2f},{sy(v):.2f}" for k, v in enumerate(ys))
        attr = escape(label, {'"': "&quot;"})
        out.append(f'<polyline data-label="{attr}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5" points="{pts}"/>')
    out.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(out) + "\n")
