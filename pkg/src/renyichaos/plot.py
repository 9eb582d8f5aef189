"""Dependency-free SVG log-log plots of scaling results.

Output is a pure function of the result, so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 480
MARGIN = dict(left=80, right=30, top=40, bottom=70)


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo: float, hi: float) -> list[float]:
    """Powers of ten inside ``[lo, hi]`` (log10 units), or the endpoints if none."""
    ticks = [float(t) for t in range(math.ceil(lo), math.floor(hi) + 1)]
    return ticks or [lo, hi]


def emit_plot(result, path) -> Path:
    """Write ``value`` against the sweep axis on log-log axes.

    Draws the data polyline, the fitted power law when a slope is present and
    ``coefficient / N^2`` when an asymptotic coefficient is attached.
    Divergent rows are left out of the polyline and listed in a note.
    """
    rows = [r for r in result.rows if not r.divergent and math.isfinite(r.value) and r.value > 0]
    if len(rows) < 2:
        raise ValueError("need at least two finite positive rows to plot")
    axis = result.axis
    xs = np.log10([getattr(r, axis) for r in rows])
    ys = np.log10([r.value for r in rows])

    curves = [("data", "#1f77b4", xs, ys)]
    if result.slope is not None:
        # least-squares intercept through the fitted points
        b = float(np.mean(ys - result.slope * xs))
        curves.append(("fit", "#d62728", xs, result.slope * xs + b))
    if result.coefficient and axis == "N":
        curves.append(("reference", "#2ca02c", xs, math.log10(result.coefficient) - 2 * xs))

    all_y = np.concatenate([c[3] for c in curves])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(all_y.min()), float(all_y.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return MARGIN["left"] + (x - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN["top"] + (y1 - y) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH // 2}" y="24" text-anchor="middle" font-size="16">{escape(result.experiment)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<text x="{_fmt(px(t))}" y="{HEIGHT - MARGIN["bottom"] + 18}" text-anchor="middle" '
                   f'font-size="12">1e{t:g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{_fmt(py(t) + 4)}" text-anchor="end" '
                   f'font-size="12">1e{t:g}</text>')
    out.append(f'<text x="{WIDTH // 2}" y="{HEIGHT - 30}" text-anchor="middle" font-size="13">{axis}</text>')

    for name, color, cx, cy in curves:
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(cx, cy))
        dash = ' stroke-dasharray="6,4"' if name != "data" else ""
        out.append(f'<polyline class="{name}" points="{pts}" fill="none" stroke="{color}" stroke-width="2"{dash}/>')
        if name == "data":
            for a, b in zip(cx, cy):
                out.append(f'<circle cx="{_fmt(px(a))}" cy="{_fmt(py(b))}" r="3" fill="{color}"/>')

    legend_y = MARGIN["top"] + 16
    labels = {"data": "value", "fit": f"fit, slope {result.slope:.4f}" if result.slope is not None else "",
              "reference": f"{result.coefficient:.6g} / N^2" if result.coefficient else ""}
    for name, color, *_ in curves:
        out.append(f'<text class="legend" x="{WIDTH - MARGIN["right"] - 8}" y="{legend_y}" text-anchor="end" '
                   f'font-size="12" fill="{color}">{escape(labels[name])}</text>')
        legend_y += 16
    divergent = [getattr(r, axis) for r in result.rows if r.divergent]
    if divergent:
        note = f"divergent at {axis} = " + ", ".join(str(v) for v in divergent)
        out.append(f'<text class="note" x="{MARGIN["left"] + 8}" y="{HEIGHT - MARGIN["bottom"] - 8}" '
                   f'font-size="12">{escape(note)}</text>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path
