"""Minimal SVG line and error-bar plots (no plotting dependency)."""
from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=60, right=20, top=30, bottom=50)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


class _Axes:
    def __init__(self, xlim, ylim):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 == self.x0:
            self.x1 = self.x0 + 1
        if self.y1 == self.y0:
            self.y1 = self.y0 + 1
        self.pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(self, x):
        return MARGIN["left"] + (np.asarray(x) - self.x0) / (self.x1 - self.x0) * self.pw

    def py(self, y):
        return MARGIN["top"] + (1 - (np.asarray(y) - self.y0) / (self.y1 - self.y0)) * self.ph


def _frame(ax, title, xlabel, ylabel):
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{ax.pw}" height="{ax.ph}" '
        'fill="none" stroke="black"/>',
        f'<text x="{WIDTH / 2}" y="18" text-anchor="middle">{escape(title)}</text>',
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 10}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="15" y="{HEIGHT / 2}" text-anchor="middle" '
        f'transform="rotate(-90 15 {HEIGHT / 2})">{escape(ylabel)}</text>',
    ]
    for x in np.linspace(ax.x0, ax.x1, 6):
        parts.append(f'<text x="{ax.px(x):.1f}" y="{MARGIN["top"] + ax.ph + 16}" '
                     f'text-anchor="middle">{x:.3g}</text>')
    for y in np.linspace(ax.y0, ax.y1, 6):
        parts.append(f'<text x="{MARGIN["left"] - 6}" y="{ax.py(y) + 4:.1f}" '
                     f'text-anchor="end">{y:.3g}</text>')
    return parts


def line_plot(path, x, series: dict, *, title="", xlabel="", ylabel="", ylim=None,
              vlines=()) -> Path:
    """One polyline per entry of ``series`` (label -> y values)."""
    x = np.asarray(x, dtype=float)
    ys = [np.asarray(v, dtype=float) for v in series.values()]
    if ylim is None:
        lo = min(float(np.nanmin(y)) for y in ys)
        hi = max(float(np.nanmax(y)) for y in ys)
        ylim = (lo, hi)
    ax = _Axes((float(x.min()), float(x.max())), ylim)
    parts = _frame(ax, title, xlabel, ylabel)
    for v in vlines:
        parts.append(f'<line x1="{ax.px(v):.1f}" x2="{ax.px(v):.1f}" y1="{MARGIN["top"]}" '
                     f'y2="{MARGIN["top"] + ax.ph}" stroke="#bbbbbb" stroke-dasharray="4 3"/>')
    for i, (label, y) in enumerate(series.items()):
        color = COLORS[i % len(COLORS)]
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(ax.px(x), ax.py(y)))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{WIDTH - MARGIN["right"] - 5}" y="{MARGIN["top"] + 16 + 14 * i}" '
                     f'text-anchor="end" fill="{color}">{escape(label)}</text>')
    parts.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(parts) + "\n")
    return path


def errorbar_plot(path, x, y, err, *, title="", xlabel="", ylabel="", ylim=(0, 1)) -> Path:
    x, y, err = (np.asarray(a, dtype=float) for a in (x, y, err))
    pad = 0.05 * (x.max() - x.min() if x.size > 1 else 1.0)
    ax = _Axes((float(x.min() - pad), float(x.max() + pad)), ylim)
    parts = _frame(ax, title, xlabel, ylabel)
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(ax.px(x), ax.py(y)))
    parts.append(f'<polyline fill="none" stroke="{COLORS[0]}" stroke-width="1.5" points="{pts}"/>')
    for xi, yi, ei in zip(x, y, err):
        cx = ax.px(xi)
        parts.append(f'<line x1="{cx:.1f}" x2="{cx:.1f}" y1="{ax.py(yi - ei):.1f}" '
                     f'y2="{ax.py(yi + ei):.1f}" stroke="black"/>')
        parts.append(f'<circle cx="{cx:.1f}" cy="{ax.py(yi):.1f}" r="3" fill="{COLORS[0]}"/>')
    parts.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(parts) + "\n")
    return path
