"""Minimal deterministic SVG line plots of trace signals."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from dualgrid.simcore import SimTrace

__all__ = ["emit_plot", "Curve"]

WIDTH, HEIGHT = 960, 540
LEFT, RIGHT, TOP, BOTTOM = 80, 30, 40, 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")
MAX_POINTS = 4000

# (label, trace, signal name); an optional fourth element offsets the signal
Curve = tuple


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    span = hi - lo
    raw = span / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    first = np.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-12 * span:
        ticks.append(float(round(v / step) * step))
        v += step
    return ticks


def emit_plot(
    curves: Sequence[Curve],
    *,
    title: str = "",
    ylabel: str = "",
    t_window: tuple[float, float] | None = None,
    dest=None,
) -> str:
    """Render ``(label, trace, signal[, offset])`` curves against time; returns SVG text."""
    if not curves:
        raise ValueError("no signals selected for plotting")
    series = []
    for c in curves:
        label, trace, name = c[0], c[1], c[2]
        offset = c[3] if len(c) > 3 else 0.0
        if not isinstance(trace, SimTrace) or len(trace) == 0:
            raise ValueError(f"curve {label!r} has an empty trace")
        t = trace.t
        y = trace[name] - offset
        if t_window is not None:
            sl = trace.window(*t_window)
            t, y = t[sl], y[sl]
        if len(t) == 0:
            raise ValueError(f"curve {label!r} has no samples in the plot window")
        stride = max(1, int(np.ceil(len(t) / MAX_POINTS)))
        series.append((label, t[::stride], y[::stride]))

    t_lo = min(float(s[1][0]) for s in series)
    t_hi = max(float(s[1][-1]) for s in series)
    y_lo = min(float(np.min(s[2])) for s in series)
    y_hi = max(float(np.max(s[2])) for s in series)
    if t_hi <= t_lo:
        t_hi = t_lo + 1.0
    if y_hi - y_lo < 1e-12 * max(1.0, abs(y_hi)):
        pad = max(abs(y_hi) * 0.05, 1e-3)
        y_lo, y_hi = y_lo - pad, y_hi + pad
    else:
        pad = 0.05 * (y_hi - y_lo)
        y_lo, y_hi = y_lo - pad, y_hi + pad

    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(t):
        return LEFT + (t - t_lo) / (t_hi - t_lo) * pw

    def py(y):
        return TOP + (y_hi - y) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for tv in _nice_ticks(t_lo, t_hi):
        x = px(tv)
        out.append(f'<line x1="{_fmt(x)}" y1="{TOP + ph}" x2="{_fmt(x)}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(x)}" y="{TOP + ph + 20}" text-anchor="middle">{tv:g}</text>')
    for yv in _nice_ticks(y_lo, y_hi):
        y = py(yv)
        out.append(f'<line x1="{LEFT - 5}" y1="{_fmt(y)}" x2="{LEFT}" y2="{_fmt(y)}" stroke="black"/>')
        out.append(f'<line x1="{LEFT}" y1="{_fmt(y)}" x2="{LEFT + pw}" y2="{_fmt(y)}" stroke="#dddddd"/>')
        out.append(f'<text x="{LEFT - 8}" y="{_fmt(y + 4)}" text-anchor="end">{yv:.6g}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">time (s)</text>')
    if ylabel:
        out.append(
            f'<text x="20" y="{TOP + ph / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 20 {TOP + ph / 2:.1f})">{escape(ylabel)}</text>'
        )
    if title:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" font-size="15">{escape(title)}</text>')
    for n, (label, t, y) in enumerate(series):
        color = COLORS[n % len(COLORS)]
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(t, y))
        dash = ' stroke-dasharray="6 4"' if n % 2 else ""
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{pts}"/>')
        ly = TOP + 18 + 18 * n
        lx = LEFT + pw - 180
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 30}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{lx + 38}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    svg = "\n".join(out) + "\n"
    if dest is not None:
        Path(dest).write_text(svg, encoding="utf-8", newline="")
    return svg
