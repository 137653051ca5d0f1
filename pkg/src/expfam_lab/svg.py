"""A small deterministic SVG writer for line plots and heat maps (no plotting dependency)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=160, top=30, bottom=50)
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]


@dataclass
class Series:
    label: str
    x: list
    y: list
    lo: list | None = None
    hi: list | None = None
    dashed: bool = False


@dataclass
class LinePlot:
    title: str
    xlabel: str
    ylabel: str
    series: list = field(default_factory=list)
    logx: bool = True
    logy: bool = True


def _fmt(v):
    return f"{v:.2f}"


def _finite_positive(vals, log):
    vals = np.asarray([v for v in vals if v is not None], dtype=float)
    vals = vals[np.isfinite(vals)]
    return vals[vals > 0] if log else vals


def _axis(lo, hi, log):
    if log:
        lo, hi = math.log10(lo), math.log10(hi)
    if hi <= lo:
        hi = lo + 1.0
    return lo, hi


def render_lines(plot):
    xs = np.concatenate([_finite_positive(s.x, plot.logx) for s in plot.series] or [np.ones(1)])
    ys = np.concatenate([_finite_positive(list(s.y) + list(s.lo or []) + list(s.hi or []), plot.logy)
                         for s in plot.series] or [np.ones(1)])
    if xs.size == 0:
        xs = np.ones(1)
    if ys.size == 0:
        ys = np.ones(1)
    x0, x1 = _axis(xs.min(), xs.max(), plot.logx)
    y0, y1 = _axis(ys.min(), ys.max(), plot.logy)
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        x = math.log10(x) if plot.logx else x
        return MARGIN["left"] + (x - x0) / (x1 - x0) * pw

    def py(y):
        y = math.log10(y) if plot.logy else y
        return MARGIN["top"] + ph - (y - y0) / (y1 - y0) * ph

    def ok(x, y):
        return (x is not None and y is not None and math.isfinite(x) and math.isfinite(y)
                and (x > 0 or not plot.logx) and (y > 0 or not plot.logy))

    out = [_header(plot.title)]
    out.append(f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
               f'fill="none" stroke="#333"/>')
    out += _ticks(x0, x1, y0, y1, plot.logx, plot.logy, pw, ph)
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.2f}" y="{HEIGHT - 12}" text-anchor="middle" '
               f'font-size="13">{plot.xlabel}</text>')
    out.append(f'<text x="16" y="{MARGIN["top"] + ph / 2:.2f}" text-anchor="middle" font-size="13" '
               f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2:.2f})">{plot.ylabel}</text>')
    for i, s in enumerate(plot.series):
        color = PALETTE[i % len(PALETTE)]
        if s.lo is not None and s.hi is not None:
            pts = [(x, lo, hi) for x, lo, hi in zip(s.x, s.lo, s.hi) if ok(x, lo) and ok(x, hi)]
            if pts:
                upper = " ".join(f"{_fmt(px(x))},{_fmt(py(hi))}" for x, _, hi in pts)
                lower = " ".join(f"{_fmt(px(x))},{_fmt(py(lo))}" for x, lo, _ in reversed(pts))
                out.append(f'<polygon points="{upper} {lower}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        pts = [(x, y) for x, y in zip(s.x, s.y) if ok(x, y)]
        if pts:
            dash = ' stroke-dasharray="6,4"' if s.dashed else ""
            path = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>')
        # divergent points are drawn as triangles pinned to the top edge
        for x, y in zip(s.x, s.y):
            if x is not None and y is not None and math.isinf(y) and (x > 0 or not plot.logx):
                cx = px(x)
                out.append(f'<path d="M{_fmt(cx - 4)},{MARGIN["top"] + 8} L{_fmt(cx + 4)},{MARGIN["top"] + 8} '
                           f'L{_fmt(cx)},{MARGIN["top"]} Z" fill="{color}"/>')
        ly = MARGIN["top"] + 14 + 18 * i
        lx = WIDTH - MARGIN["right"] + 12
        dash = ' stroke-dasharray="6,4"' if s.dashed else ""
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 22}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{lx + 28}" y="{ly + 4}" font-size="11">{_escape(s.label)}</text>')
    out.append("</svg>\n")
    return "\n".join(out)


def render_heatmap(title, xs, ys, values, xlabel, ylabel, overlay=None):
    """Log-log heat map of ``values[i, j]`` at (xs[i], ys[j]); overlay is a list of (x, y)."""
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    vals = np.log10(np.asarray(values, dtype=float))
    finite = vals[np.isfinite(vals)]
    vmin, vmax = (finite.min(), finite.max()) if finite.size else (0.0, 1.0)
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    lx, ly = np.log10(xs), np.log10(ys)
    x0, x1, y0, y1 = lx[0], lx[-1], ly[0], ly[-1]
    cw, ch = pw / len(xs), ph / len(ys)
    out = [_header(title)]
    for i in range(len(xs)):
        for j in range(len(ys)):
            v = vals[i, j]
            t = 0.0 if not np.isfinite(v) else (v - vmin) / (vmax - vmin or 1.0)
            out.append(f'<rect x="{_fmt(MARGIN["left"] + i * cw)}" y="{_fmt(MARGIN["top"] + ph - (j + 1) * ch)}" '
                       f'width="{_fmt(cw + 0.3)}" height="{_fmt(ch + 0.3)}" fill="{_ramp(t)}"/>')

    def px(x):
        return MARGIN["left"] + (math.log10(x) - x0) / (x1 - x0) * (pw - cw) + cw / 2

    def py(y):
        return MARGIN["top"] + ph - ((math.log10(y) - y0) / (y1 - y0) * (ph - ch) + ch / 2)

    if overlay:
        pts = [(x, y) for x, y in overlay if xs[0] <= x <= xs[-1] and ys[0] <= y <= ys[-1]]
        path = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in pts)
        out.append(f'<polyline points="{path}" fill="none" stroke="#fff" stroke-width="2" stroke-dasharray="5,3"/>')
    out += _ticks(x0, x1, y0, y1, True, True, pw, ph)
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.2f}" y="{HEIGHT - 12}" text-anchor="middle" '
               f'font-size="13">{xlabel}</text>')
    out.append(f'<text x="16" y="{MARGIN["top"] + ph / 2:.2f}" text-anchor="middle" font-size="13" '
               f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2:.2f})">{ylabel}</text>')
    out.append(f'<text x="{WIDTH - MARGIN["right"] + 12}" y="{MARGIN["top"] + 14}" font-size="11">'
               f'log10 risk in [{vmin:.2f}, {vmax:.2f}]</text>')
    out.append("</svg>\n")
    return "\n".join(out)


def _ramp(t):
    # dark blue to yellow
    r = int(20 + 235 * t)
    g = int(30 + 200 * t)
    b = int(110 - 80 * t)
    return f"#{r:02x}{g:02x}{b:02x}"


def _ticks(x0, x1, y0, y1, logx, logy, pw, ph):
    out = []
    for k in _tick_values(x0, x1):
        x = MARGIN["left"] + (k - x0) / (x1 - x0) * pw
        label = f"1e{k:g}" if logx else f"{k:g}"
        out.append(f'<text x="{_fmt(x)}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle" font-size="11">{label}</text>')
    for k in _tick_values(y0, y1):
        y = MARGIN["top"] + ph - (k - y0) / (y1 - y0) * ph
        label = f"1e{k:g}" if logy else f"{k:g}"
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{_fmt(y + 4)}" text-anchor="end" font-size="11">{label}</text>')
    return out


def _tick_values(lo, hi):
    step = 10 ** math.floor(math.log10(max(hi - lo, 1e-12)))
    if (hi - lo) / step < 3:
        step /= 2
    start = math.ceil(lo / step) * step
    vals = []
    v = start
    while v <= hi + 1e-12 and len(vals) < 12:
        vals.append(round(v, 10))
        v += step
    return vals


def _header(title):
    return (f'<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">\n'
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>\n'
            f'<text x="{WIDTH / 2}" y="18" text-anchor="middle" font-size="14">{_escape(title)}</text>')


def _escape(text):
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
