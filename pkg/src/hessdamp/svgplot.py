"""Minimal deterministic SVG line plots (no plotting dependency)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 800, 600
LEFT, RIGHT, TOP, BOTTOM = 90, 30, 50, 70
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]
MAX_POINTS = 2000


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _nice_ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _tick_label(v: float) -> str:
    return f"{v:g}"


def _thin(x: np.ndarray, y: np.ndarray):
    if len(x) <= MAX_POINTS:
        return x, y
    idx = np.unique(np.linspace(0, len(x) - 1, MAX_POINTS).round().astype(int))
    return x[idx], y[idx]


def line_plot(series, *, title: str = "", xlabel: str = "", ylabel: str = "",
              logy: bool = False) -> str:
    """Render ``series`` (a list of ``(label, x, y)``) as an 800x600 SVG document.

    With ``logy`` the vertical axis is log10 with one tick per decade;
    nonpositive values are dropped.
    """
    prepared = []
    for label, x, y in series:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        if logy:
            keep &= y > 0
        x, y = x[keep], y[keep]
        if logy:
            y = np.log10(y)
        prepared.append((label, *_thin(x, y)))
    nonempty = [p for p in prepared if len(p[1])]
    if not nonempty:
        raise ValueError("no data rows")
    xmin = min(p[1].min() for p in nonempty)
    xmax = max(p[1].max() for p in nonempty)
    ymin = min(p[2].min() for p in nonempty)
    ymax = max(p[2].max() for p in nonempty)
    if logy:
        ymin, ymax = math.floor(ymin), math.ceil(ymax)
        if ymax == ymin:
            ymax += 1
        yticks = [float(e) for e in range(int(ymin), int(ymax) + 1)]
    else:
        if ymax == ymin:
            ymin, ymax = ymin - 0.5, ymax + 0.5
        yticks = _nice_ticks(ymin, ymax)
    if xmax == xmin:
        xmin, xmax = xmin - 0.5, xmax + 0.5
    xticks = _nice_ticks(xmin, xmax)

    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(v):
        return LEFT + (v - xmin) / (xmax - xmin) * pw

    def py(v):
        return TOP + ph - (v - ymin) / (ymax - ymin) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="28" text-anchor="middle" font-size="16">'
                   f'{escape(title)}</text>')
    for t in xticks:
        if xmin - 1e-12 <= t <= xmax + 1e-12:
            x = px(t)
            out.append(f'<line x1="{_fmt(x)}" y1="{TOP + ph}" x2="{_fmt(x)}" y2="{TOP + ph + 5}" '
                       'stroke="black"/>')
            out.append(f'<text x="{_fmt(x)}" y="{TOP + ph + 20}" text-anchor="middle">'
                       f'{_tick_label(t)}</text>')
    for t in yticks:
        if ymin - 1e-12 <= t <= ymax + 1e-12:
            y = py(t)
            out.append(f'<line x1="{LEFT - 5}" y1="{_fmt(y)}" x2="{LEFT + pw}" y2="{_fmt(y)}" '
                       'stroke="#dddddd"/>')
            label = f"1e{int(t)}" if logy else _tick_label(t)
            out.append(f'<text x="{LEFT - 8}" y="{_fmt(y + 4)}" text-anchor="end">{label}</text>')
    if xlabel:
        out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 20}" text-anchor="middle">'
                   f'{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="20" y="{TOP + ph / 2:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 20 {TOP + ph / 2:.1f})">{escape(ylabel)}</text>')
    lx = LEFT + pw - 150
    out.append(f'<rect x="{lx - 6}" y="{TOP + 6}" width="150" height="{18 * len(prepared) + 6}" '
               'fill="white" fill-opacity="0.85" stroke="#cccccc"/>')
    for i, (label, x, y) in enumerate(prepared):
        color = COLORS[i % len(COLORS)]
        if len(x):
            pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y))
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                       f'points="{pts}"><title>{escape(label)}</title></polyline>')
        ly = TOP + 18 + 18 * i
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 30}" y="{ly}" class="legend">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
