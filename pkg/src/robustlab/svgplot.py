"""Minimal deterministic SVG line charts.

Figures are plain-text SVG built from the data alone: fixed 800x600
viewBox, fixed palette, coordinates rounded to 0.01 px, tick labels via
%.4g. Rendering the same series twice yields byte-identical files, which
is what the artifact tests diff. Non-finite points are dropped per series;
a series with no finite points is skipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["Series", "line_chart"]

PALETTE = ("#1965b0", "#dc050c", "#4eb265", "#f7a600", "#882e72", "#777777")

_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 80.0, 30.0, 50.0, 60.0
_W, _H = 800.0, 600.0


@dataclass(frozen=True)
class Series:
    """One polyline: y values over x, with optional symmetric y error bars."""

    label: str
    xs: tuple
    ys: tuple
    yerr: tuple = None

    def __post_init__(self):
        if len(self.xs) != len(self.ys):
            raise ValueError("xs and ys must have equal length")
        if self.yerr is not None and len(self.yerr) != len(self.ys):
            raise ValueError("yerr must match ys in length")


def _esc(text):
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _fmt(v):
    return f"{v:.2f}"


def _finite_points(s):
    pts = []
    for i in range(len(s.xs)):
        x, y = float(s.xs[i]), float(s.ys[i])
        e = 0.0 if s.yerr is None else float(s.yerr[i])
        if math.isfinite(x) and math.isfinite(y) and math.isfinite(e):
            pts.append((x, y, e))
    return pts


def _transform(lo, hi, log):
    if log:
        if lo <= 0:
            raise ValueError("log axis requires positive values")
        lo, hi = math.log10(lo), math.log10(hi)
    if hi - lo < 1e-12 * max(1.0, abs(lo)):
        pad = max(1.0, abs(lo)) * 0.5
        lo, hi = lo - pad, hi + pad
    else:
        pad = (hi - lo) * 0.05
        lo, hi = lo - pad, hi + pad
    return lo, hi


def _ticks(lo, hi, log, count=6):
    """Tick positions in transformed units plus their display values."""
    if log:
        first, last = math.ceil(lo), math.floor(hi)
        if last - first + 1 >= 2:
            step = max(1, (last - first) // (count - 1))
            return [(float(t), 10.0**t) for t in range(first, last + 1, step)]
    span = hi - lo
    raw = span / (count - 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-9 * step:
        val = 10.0**t if log else t
        out.append((t, val))
        t += step
    return out


def line_chart(series, title="", xlabel="", ylabel="", logx=False, logy=False):
    """Render series to an SVG string (800x600 viewBox)."""
    drawn = [(s, _finite_points(s)) for s in series]
    drawn = [(s, p) for s, p in drawn if p]
    if not drawn:
        raise ValueError("no finite data to plot")
    xs = [x for _, pts in drawn for x, _, _ in pts]
    yl = [y - e for _, pts in drawn for _, y, e in pts]
    yh = [y + e for _, pts in drawn for _, y, e in pts]
    x_lo, x_hi = _transform(min(xs), max(xs), logx)
    y_lo, y_hi = _transform(min(yl), max(yh), logy)

    def px(x):
        t = math.log10(x) if logx else x
        return _MARGIN_L + (t - x_lo) / (x_hi - x_lo) * (_W - _MARGIN_L - _MARGIN_R)

    def py(y):
        t = math.log10(y) if logy else y
        return _H - _MARGIN_B - (t - y_lo) / (y_hi - y_lo) * (_H - _MARGIN_T - _MARGIN_B)

    out = []
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {int(_W)} {int(_H)}">')
    out.append(f'<rect x="0" y="0" width="{int(_W)}" height="{int(_H)}" fill="#ffffff"/>')
    if title:
        out.append(
            f'<text x="{_fmt(_W / 2)}" y="28" font-family="sans-serif" font-size="18" text-anchor="middle">{_esc(title)}</text>'
        )

    x0, x1 = _MARGIN_L, _W - _MARGIN_R
    y0, y1 = _H - _MARGIN_B, _MARGIN_T
    for t, val in _ticks(x_lo, x_hi, logx):
        p = _MARGIN_L + (t - x_lo) / (x_hi - x_lo) * (x1 - x0)
        out.append(f'<line x1="{_fmt(p)}" y1="{_fmt(y0)}" x2="{_fmt(p)}" y2="{_fmt(y1)}" stroke="#e0e0e0"/>')
        out.append(
            f'<text x="{_fmt(p)}" y="{_fmt(y0 + 20)}" font-family="sans-serif" font-size="12" text-anchor="middle">{val:.4g}</text>'
        )
    for t, val in _ticks(y_lo, y_hi, logy):
        p = y0 - (t - y_lo) / (y_hi - y_lo) * (y0 - y1)
        out.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(p)}" x2="{_fmt(x1)}" y2="{_fmt(p)}" stroke="#e0e0e0"/>')
        out.append(
            f'<text x="{_fmt(x0 - 8)}" y="{_fmt(p + 4)}" font-family="sans-serif" font-size="12" text-anchor="end">{val:.4g}</text>'
        )
    out.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x1)}" y2="{_fmt(y0)}" stroke="#000000"/>')
    out.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x0)}" y2="{_fmt(y1)}" stroke="#000000"/>')
    if xlabel:
        out.append(
            f'<text x="{_fmt((x0 + x1) / 2)}" y="{_fmt(_H - 16)}" font-family="sans-serif" font-size="14" text-anchor="middle">{_esc(xlabel)}</text>'
        )
    if ylabel:
        cx, cy = 22.0, (y0 + y1) / 2
        out.append(
            f'<text x="{_fmt(cx)}" y="{_fmt(cy)}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 {_fmt(cx)} {_fmt(cy)})">{_esc(ylabel)}</text>'
        )

    for si, (s, pts) in enumerate(drawn):
        color = PALETTE[si % len(PALETTE)]
        coords = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y, _ in pts)
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y, e in pts:
            cx, cy = px(x), py(y)
            if e > 0.0:
                lo, hi = y - e, y + e
                if not logy or lo > 0.0:
                    t, b = py(hi), py(lo)
                    out.append(f'<line x1="{_fmt(cx)}" y1="{_fmt(t)}" x2="{_fmt(cx)}" y2="{_fmt(b)}" stroke="{color}"/>')
                    out.append(f'<line x1="{_fmt(cx - 4)}" y1="{_fmt(t)}" x2="{_fmt(cx + 4)}" y2="{_fmt(t)}" stroke="{color}"/>')
                    out.append(f'<line x1="{_fmt(cx - 4)}" y1="{_fmt(b)}" x2="{_fmt(cx + 4)}" y2="{_fmt(b)}" stroke="{color}"/>')
            out.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="3" fill="{color}"/>')

    lx, ly = x1 - 170.0, y1 + 10.0
    out.append(
        f'<rect x="{_fmt(lx - 10)}" y="{_fmt(ly - 14)}" width="180" height="{_fmt(18.0 * len(drawn) + 8)}" fill="#ffffff" stroke="#c0c0c0"/>'
    )
    for si, (s, _) in enumerate(drawn):
        color = PALETTE[si % len(PALETTE)]
        row = ly + 18.0 * si
        out.append(f'<line x1="{_fmt(lx)}" y1="{_fmt(row - 4)}" x2="{_fmt(lx + 24)}" y2="{_fmt(row - 4)}" stroke="{color}" stroke-width="1.5"/>')
        out.append(
            f'<text x="{_fmt(lx + 30)}" y="{_fmt(row)}" font-family="sans-serif" font-size="12">{_esc(s.label)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
