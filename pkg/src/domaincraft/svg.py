"""Minimal deterministic SVG charts (scatter with fit lines, heatmap).

Output depends only on the inputs: fixed float formatting, no timestamps,
no random ids, so files can be pinned by golden tests.
"""

from __future__ import annotations

from html import escape
from typing import Mapping, Sequence

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
W, H = 560, 400
LEFT, RIGHT, TOP, BOTTOM = 60, 150, 30, 50


def _f(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    return [lo + (hi - lo) * i / n for i in range(n + 1)]


def _header(width: int, height: int, title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width // 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
    ]


def scatter(series: Mapping[str, Sequence[tuple[float, float]]], x_label: str, y_label: str, title: str = "",
            x_range: tuple[float, float] = (0.0, 1.0), y_range: tuple[float, float] | None = None,
            fits: Mapping[str, tuple[float, float]] | None = None) -> str:
    """Scatter plot, one colour per series, optional (slope, intercept) fit lines and a legend."""
    ys = [y for pts in series.values() for _, y in pts]
    if y_range is None:
        top = max(ys) if ys else 1.0
        y_range = (0.0, max(1.0, 10.0 * -(-top // 10)))
    x0, x1 = x_range
    y0, y1 = y_range
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + ph - (y - y0) / (y1 - y0) * ph

    out = _header(W, H, title)
    out.append(f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{_f(px(t))}" y1="{TOP + ph}" x2="{_f(px(t))}" y2="{TOP + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{_f(px(t))}" y="{TOP + ph + 16}" text-anchor="middle">{t:.2f}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{LEFT - 4}" y1="{_f(py(t))}" x2="{LEFT}" y2="{_f(py(t))}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 7}" y="{_f(py(t) + 4)}" text-anchor="end">{t:.1f}</text>')
    out.append(f'<text x="{_f(LEFT + pw / 2)}" y="{H - 12}" text-anchor="middle">{escape(x_label)}</text>')
    out.append(f'<text x="16" y="{_f(TOP + ph / 2)}" text-anchor="middle" '
               f'transform="rotate(-90 16 {_f(TOP + ph / 2)})">{escape(y_label)}</text>')
    for i, (name, pts) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        for x, y in pts:
            out.append(f'<circle cx="{_f(px(x))}" cy="{_f(py(y))}" r="3.5" fill="{color}" fill-opacity="0.8"/>')
        if fits and name in fits:
            slope, icpt = fits[name]
            ya, yb = icpt + slope * x0, icpt + slope * x1
            out.append(f'<line x1="{_f(px(x0))}" y1="{_f(py(ya))}" x2="{_f(px(x1))}" y2="{_f(py(yb))}" '
                       f'stroke="{color}" stroke-dasharray="5,3"/>')
        ly = TOP + 10 + 18 * i
        out.append(f'<circle cx="{W - RIGHT + 16}" cy="{ly}" r="4" fill="{color}"/>')
        out.append(f'<text x="{W - RIGHT + 26}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def heatmap(labels: Sequence[str], values: Sequence[Sequence[float]], title: str = "") -> str:
    """Square matrix in [0, 1], white (0) to dark blue (1), values printed in cells."""
    n = len(labels)
    cell = 48
    left, top = 120, 40
    width, height = left + n * cell + 20, top + n * cell + 110
    out = _header(width, height, title)
    for i, row in enumerate(values):
        for j, v in enumerate(row):
            shade = int(round(255 * (1.0 - min(max(v, 0.0), 1.0))))
            fill = f"#{shade:02x}{shade:02x}ff"
            text = "white" if v > 0.6 else "black"
            x, y = left + j * cell, top + i * cell
            out.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{fill}" stroke="#888"/>')
            out.append(f'<text x="{x + cell // 2}" y="{y + cell // 2 + 4}" text-anchor="middle" '
                       f'fill="{text}">{v:.2f}</text>')
    for i, name in enumerate(labels):
        out.append(f'<text x="{left - 6}" y="{top + i * cell + cell // 2 + 4}" text-anchor="end">{escape(name)}</text>')
        cx = left + i * cell + cell // 2
        cy = top + n * cell + 8
        out.append(f'<text x="{cx}" y="{cy}" text-anchor="end" transform="rotate(-60 {cx} {cy})">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
