"""Self-contained SVG figures: filled-contour heatmaps, scatter plots, orbit projections.

Output is plain text built from fixed-precision numbers, so identical inputs
give identical bytes.
"""
from __future__ import annotations

import math
import os
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["PlotError", "heatmap_svg", "orbit_svg", "save_svg", "scatter_svg"]

W, H = 480, 400
LEFT, RIGHT, TOP, BOTTOM = 64, 96, 36, 52

# perceptually ordered ramp (dark blue -> yellow)
_RAMP = [
    (0.00, (68, 1, 84)),
    (0.25, (59, 82, 139)),
    (0.50, (33, 145, 140)),
    (0.75, (94, 201, 98)),
    (1.00, (253, 231, 37)),
]


class PlotError(ValueError):
    """Data cannot be drawn (empty, non-finite or degenerate axes)."""


def _color(t: float) -> str:
    t = min(1.0, max(0.0, t))
    for (t0, c0), (t1, c1) in zip(_RAMP, _RAMP[1:]):
        if t <= t1:
            w = (t - t0) / (t1 - t0)
            rgb = [round(a + w * (b - a)) for a, b in zip(c0, c1)]
            return "#%02x%02x%02x" % tuple(rgb)
    return "#%02x%02x%02x" % _RAMP[-1][1]


def _n(v: float) -> str:
    s = f"{v:.2f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _tick(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.2e}"
    return f"{v:.4g}"


def _range(values, pad_zero: bool) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        raise PlotError("no finite values to plot")
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        if not pad_zero:
            raise PlotError("axis range is degenerate")
        d = max(1.0, abs(lo)) * 0.05
        lo, hi = lo - d, hi + d
    return lo, hi


class _Canvas:
    def __init__(self, title: str, metadata: str | None):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">'
        ]
        if metadata:
            self.parts.append(f"<metadata>{escape(metadata)}</metadata>")
        self.parts.append(f'<rect width="{W}" height="{H}" fill="white"/>')
        self.parts.append(
            f'<text x="{W // 2}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>'
        )

    def add(self, s: str):
        self.parts.append(s)

    def text(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


class _Axes:
    def __init__(self, xr, yr):
        self.xr, self.yr = xr, yr
        self.x0, self.x1 = LEFT, W - RIGHT
        self.y0, self.y1 = H - BOTTOM, TOP

    def px(self, x):
        return self.x0 + (x - self.xr[0]) / (self.xr[1] - self.xr[0]) * (self.x1 - self.x0)

    def py(self, y):
        return self.y0 + (y - self.yr[0]) / (self.yr[1] - self.yr[0]) * (self.y1 - self.y0)

    def draw(self, c: _Canvas, xlabel: str, ylabel: str):
        c.add(f'<rect x="{self.x0}" y="{self.y1}" width="{self.x1 - self.x0}" '
              f'height="{self.y0 - self.y1}" fill="none" stroke="black"/>')
        for i in range(5):
            xv = self.xr[0] + i * (self.xr[1] - self.xr[0]) / 4
            yv = self.yr[0] + i * (self.yr[1] - self.yr[0]) / 4
            X, Y = self.px(xv), self.py(yv)
            c.add(f'<line x1="{_n(X)}" y1="{self.y0}" x2="{_n(X)}" y2="{self.y0 + 4}" stroke="black"/>')
            c.add(f'<text x="{_n(X)}" y="{self.y0 + 16}" text-anchor="middle">{_tick(xv)}</text>')
            c.add(f'<line x1="{self.x0 - 4}" y1="{_n(Y)}" x2="{self.x0}" y2="{_n(Y)}" stroke="black"/>')
            c.add(f'<text x="{self.x0 - 6}" y="{_n(Y + 4)}" text-anchor="end">{_tick(yv)}</text>')
        c.add(f'<text x="{(self.x0 + self.x1) // 2}" y="{H - 12}" text-anchor="middle">'
              f'{escape(xlabel)}</text>')
        c.add(f'<text x="16" y="{(self.y0 + self.y1) // 2}" text-anchor="middle" '
              f'transform="rotate(-90 16 {(self.y0 + self.y1) // 2})">{escape(ylabel)}</text>')


def _edges(v: np.ndarray) -> np.ndarray:
    mid = 0.5 * (v[1:] + v[:-1])
    return np.concatenate([[v[0] - (mid[0] - v[0])], mid, [v[-1] + (v[-1] - mid[-1])]])


def heatmap_svg(
    x: Sequence[float],
    y: Sequence[float],
    z,
    *,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    zlabel: str = "dB",
    levels: int = 12,
    metadata: str | None = None,
) -> str:
    """Filled-contour heatmap of ``z[i, j]`` over ``x[i]`` (horizontal) and ``y[j]``.

    Values are quantized into ``levels`` bands; non-finite cells are grey.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    if z.shape != (x.size, y.size):
        raise PlotError(f"z has shape {z.shape}, expected {(x.size, y.size)}")
    if x.size < 2 or y.size < 2:
        raise PlotError("a heatmap needs at least two values on each axis")
    order_x, order_y = np.argsort(x, kind="stable"), np.argsort(y, kind="stable")
    x, y, z = x[order_x], y[order_y], z[order_x][:, order_y]
    ex, ey = _edges(x), _edges(y)
    ax = _Axes(_range(ex, False), _range(ey, False))
    zlo, zhi = _range(z, True)
    step = (zhi - zlo) / levels
    c = _Canvas(title, metadata)
    for i in range(x.size):
        for j in range(y.size):
            v = z[i, j]
            if math.isfinite(v):
                band = min(levels - 1, int((v - zlo) / step))
                fill = _color((band + 0.5) / levels)
            else:
                fill = "#bbbbbb"
            X0, X1 = ax.px(ex[i]), ax.px(ex[i + 1])
            Y0, Y1 = ax.py(ey[j + 1]), ax.py(ey[j])
            c.add(f'<rect x="{_n(X0)}" y="{_n(Y0)}" width="{_n(X1 - X0)}" '
                  f'height="{_n(Y1 - Y0)}" fill="{fill}" stroke="{fill}" stroke-width="0.5"/>')
    ax.draw(c, xlabel, ylabel)
    bx = W - RIGHT + 16
    bh = (ax.y0 - ax.y1) / levels
    for k in range(levels):
        yk = ax.y0 - (k + 1) * bh
        c.add(f'<rect x="{bx}" y="{_n(yk)}" width="14" height="{_n(bh)}" '
              f'fill="{_color((k + 0.5) / levels)}"/>')
    for k in range(0, levels + 1, max(1, levels // 4)):
        yk = ax.y0 - k * bh
        c.add(f'<text x="{bx + 18}" y="{_n(yk + 4)}">{_tick(zlo + k * step)}</text>')
    c.add(f'<text x="{bx}" y="{ax.y1 - 8}">{escape(zlabel)}</text>')
    return c.text()


def scatter_svg(
    x: Sequence[float],
    y: Sequence[float],
    *,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    diagonal: bool = True,
    metadata: str | None = None,
) -> str:
    """Scatter plot with an optional ``y = x`` reference line."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = np.isfinite(x) & np.isfinite(y)
    x, y = x[keep], y[keep]
    if x.size == 0:
        raise PlotError("no finite points to plot")
    ax = _Axes(_range(x, True), _range(y, True))
    c = _Canvas(title, metadata)
    ax.draw(c, xlabel, ylabel)
    if diagonal:
        lo = max(ax.xr[0], ax.yr[0])
        hi = min(ax.xr[1], ax.yr[1])
        if hi > lo:
            c.add(f'<line x1="{_n(ax.px(lo))}" y1="{_n(ax.py(lo))}" x2="{_n(ax.px(hi))}" '
                  f'y2="{_n(ax.py(hi))}" stroke="#999999" stroke-dasharray="4 3"/>')
    for a, b in zip(x, y):
        c.add(f'<circle cx="{_n(ax.px(a))}" cy="{_n(ax.py(b))}" r="3" '
              f'fill="#3b528b" fill-opacity="0.7"/>')
    return c.text()


def orbit_svg(
    samples,
    dims: Sequence[int] = (0, 1),
    *,
    labels: Sequence[str] | None = None,
    title: str = "",
    metadata: str | None = None,
) -> str:
    """Closed-curve projection of a cycle onto two or three state coordinates.

    Three coordinates are drawn in a fixed oblique projection.
    """
    s = np.asarray(samples, dtype=float)
    if s.ndim != 2 or s.shape[0] < 2:
        raise PlotError("orbit needs at least two samples")
    dims = tuple(dims)
    if len(dims) not in (2, 3) or max(dims) >= s.shape[1]:
        raise PlotError(f"cannot project {s.shape[1]}-dimensional samples onto {dims}")
    labels = list(labels) if labels else [f"x{d + 1}" for d in dims]
    if len(dims) == 2:
        u, v = s[:, dims[0]], s[:, dims[1]]
        xlabel, ylabel = labels[0], labels[1]
    else:
        a, b, h = s[:, dims[0]], s[:, dims[1]], s[:, dims[2]]
        u = a - 0.5 * b * math.cos(math.pi / 6)
        v = h - 0.5 * b * math.sin(math.pi / 6)
        xlabel = f"{labels[0]} (oblique {labels[1]})"
        ylabel = labels[2]
    ur, vr = _range(u, True), _range(v, True)
    # equal aspect so circles stay circles
    half = 0.5 * max(ur[1] - ur[0], vr[1] - vr[0]) * 1.05
    uc, vc = 0.5 * (ur[0] + ur[1]), 0.5 * (vr[0] + vr[1])
    ax = _Axes((uc - half, uc + half), (vc - half, vc + half))
    ax.x1 = ax.x0 + (ax.y0 - ax.y1)
    c = _Canvas(title, metadata)
    ax.draw(c, xlabel, ylabel)
    pts = " ".join(f"{_n(ax.px(p))},{_n(ax.py(q))}" for p, q in zip(u, v))
    c.add(f'<polygon points="{pts}" fill="none" stroke="#21918c" stroke-width="1.5"/>')
    c.add(f'<circle cx="{_n(ax.px(u[0]))}" cy="{_n(ax.py(v[0]))}" r="3" fill="#440154"/>')
    return c.text()


def save_svg(text: str, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)

