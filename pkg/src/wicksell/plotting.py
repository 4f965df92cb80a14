"""Minimal standalone SVG plots with byte-deterministic output."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .errors import WicksellError

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")
WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 64, 150, 36, 48


@dataclass
class Series:
    """One plotted series; ``style`` is ``line``, ``step`` or ``scatter``."""

    x: Sequence[float]
    y: Sequence[float]
    label: str = ""
    style: str = "line"
    color: str | None = None
    width: float = 1.5


def _n(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int(math.floor((hi - start) / step + 1e-9)) + 1)]


def _step_points(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # right-continuous steps: hold y[i] on [x[i], x[i+1])
    xs = np.repeat(x, 2)[1:]
    ys = np.repeat(y, 2)[:-1]
    return xs, ys


def render_svg(series: Sequence[Series], title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    if not series:
        raise WicksellError("nothing to plot")
    xs = np.concatenate([np.asarray(s.x, dtype=float) for s in series])
    ys = np.concatenate([np.asarray(s.y, dtype=float) for s in series])
    ok = np.isfinite(xs) & np.isfinite(ys)
    if not ok.any():
        raise WicksellError("no finite points to plot")
    x0, x1 = float(xs[ok].min()), float(xs[ok].max())
    y0, y1 = float(ys[ok].min()), float(ys[ok].max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.04 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(v):
        return LEFT + (v - x0) / (x1 - x0) * pw

    def py(v):
        return TOP + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{_n(px(t))}" y1="{TOP + ph}" x2="{_n(px(t))}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(
            f'<text x="{_n(px(t))}" y="{TOP + ph + 18}" font-size="11" text-anchor="middle">{t:.4g}</text>'
        )
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{LEFT - 5}" y1="{_n(py(t))}" x2="{LEFT}" y2="{_n(py(t))}" stroke="black"/>')
        out.append(
            f'<text x="{LEFT - 8}" y="{_n(py(t) + 4)}" font-size="11" text-anchor="end">{t:.4g}</text>'
        )
    if title:
        out.append(f'<text x="{LEFT + pw / 2:.2f}" y="22" font-size="14" text-anchor="middle">{escape(title)}</text>')
    if xlabel:
        out.append(
            f'<text x="{LEFT + pw / 2:.2f}" y="{HEIGHT - 10}" font-size="12" text-anchor="middle">{escape(xlabel)}</text>'
        )
    if ylabel:
        out.append(
            f'<text x="16" y="{TOP + ph / 2:.2f}" font-size="12" text-anchor="middle" '
            f'transform="rotate(-90 16 {TOP + ph / 2:.2f})">{escape(ylabel)}</text>'
        )
    legend_y = TOP + 10
    for i, s in enumerate(series):
        color = s.color or PALETTE[i % len(PALETTE)]
        x = np.asarray(s.x, dtype=float)
        y = np.asarray(s.y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        x, y = x[keep], y[keep]
        if s.style == "scatter":
            for a, b in zip(x, y):
                out.append(f'<circle cx="{_n(px(a))}" cy="{_n(py(b))}" r="2.5" fill="{color}"/>')
        else:
            if s.style == "step":
                x, y = _step_points(x, y)
            pts = " ".join(f"{_n(px(a))},{_n(py(b))}" for a, b in zip(x, y))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{s.width}"/>')
        if s.label:
            lx = LEFT + pw + 12
            out.append(f'<line x1="{lx}" y1="{legend_y}" x2="{lx + 18}" y2="{legend_y}" stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{lx + 24}" y="{legend_y + 4}" font-size="11">{escape(s.label)}</text>')
            legend_y += 16
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(series: Sequence[Series], path: str | Path, title: str = "", xlabel: str = "", ylabel: str = "") -> Path:
    """Write an SVG file; identical input gives identical bytes."""
    svg = render_svg(series, title, xlabel, ylabel)
    p = Path(path)
    try:
        p.write_text(svg)
    except OSError as exc:
        raise WicksellError(f"cannot write {p}: {exc}") from exc
    return p
