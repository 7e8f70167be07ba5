"""Minimal deterministic SVG plotting: polylines, scatters, axes, log scales.

No external plotting dependency and no timestamps or other run-varying
metadata, so identical data produces byte-identical files.
"""

from __future__ import annotations

import math

_WIDTH, _HEIGHT = 640, 440
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 20, 36, 50
_COLORS = ("#1f6fb2", "#d1495b", "#3a7d44", "#8d5a97", "#c77b2e")


def _fmt(x):
    return f"{x:.6g}"


def _ticks(lo, hi, count=5):
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / count))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= count:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * span:
        ticks.append(0.0 if abs(t) < 1e-12 * span else t)
        t += step
    return ticks


def _log_ticks(lo, hi):
    lo_e = math.floor(math.log10(lo))
    hi_e = math.ceil(math.log10(hi))
    stride = max(1, (hi_e - lo_e) // 6)
    return [10.0 ** e for e in range(lo_e, hi_e + 1, stride)]


class _Axis:
    def __init__(self, values, log):
        vals = [v for v in values if not log or v > 0]
        if not vals:
            vals = [1.0]
        self.log = log
        lo, hi = min(vals), max(vals)
        if log:
            self.lo, self.hi = lo, hi if hi > lo else lo * 10
        else:
            pad = 0.05 * (hi - lo) if hi > lo else max(abs(lo), 1.0) * 0.1
            self.lo, self.hi = lo - pad, hi + pad

    def unit(self, v):
        if self.log:
            return (math.log10(v) - math.log10(self.lo)) / (
                math.log10(self.hi) - math.log10(self.lo))
        return (v - self.lo) / (self.hi - self.lo)

    def ticks(self):
        return _log_ticks(self.lo, self.hi) if self.log else _ticks(self.lo, self.hi)


def _render(series, xlabel, ylabel, title, logx, logy, scatter):
    xs_all = [x for s in series for x in s[0]]
    ys_all = [y for s in series for y in s[1]]
    ax_x = _Axis(xs_all, logx)
    ax_y = _Axis(ys_all, logy)
    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def px(v):
        return _MARGIN_L + ax_x.unit(v) * plot_w

    def py(v):
        return _HEIGHT - _MARGIN_B - ax_y.unit(v) * plot_h

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
           f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
           f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
           f'<text x="{_WIDTH / 2}" y="20" text-anchor="middle" '
           f'font-family="monospace" font-size="14">{title}</text>']
    # frame
    out.append(f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" '
               f'height="{plot_h}" fill="none" stroke="#444"/>')
    for t in ax_x.ticks():
        if not ax_x.lo <= t <= ax_x.hi:
            continue
        x = px(t)
        out.append(f'<line x1="{_fmt(x)}" y1="{_HEIGHT - _MARGIN_B}" '
                   f'x2="{_fmt(x)}" y2="{_HEIGHT - _MARGIN_B + 5}" stroke="#444"/>')
        out.append(f'<text x="{_fmt(x)}" y="{_HEIGHT - _MARGIN_B + 18}" '
                   f'text-anchor="middle" font-family="monospace" '
                   f'font-size="10">{_fmt(t)}</text>')
    for t in ax_y.ticks():
        if not ax_y.lo <= t <= ax_y.hi:
            continue
        y = py(t)
        out.append(f'<line x1="{_MARGIN_L - 5}" y1="{_fmt(y)}" x2="{_MARGIN_L}" '
                   f'y2="{_fmt(y)}" stroke="#444"/>')
        out.append(f'<text x="{_MARGIN_L - 8}" y="{_fmt(y + 3)}" text-anchor="end" '
                   f'font-family="monospace" font-size="10">{_fmt(t)}</text>')
    out.append(f'<text x="{_WIDTH / 2}" y="{_HEIGHT - 12}" text-anchor="middle" '
               f'font-family="monospace" font-size="12">{xlabel}</text>')
    out.append(f'<text x="16" y="{_HEIGHT / 2}" text-anchor="middle" '
               f'font-family="monospace" font-size="12" '
               f'transform="rotate(-90 16 {_HEIGHT / 2})">{ylabel}</text>')

    for idx, (xs, ys, label) in enumerate(series):
        color = _COLORS[idx % len(_COLORS)]
        pts = [(px(x), py(y)) for x, y in zip(xs, ys)
               if (not logx or x > 0) and (not logy or y > 0)]
        if scatter:
            for x, y in pts:
                out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="2.2" '
                           f'fill="{color}" fill-opacity="0.7"/>')
        elif pts:
            path = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
            out.append(f'<polyline points="{path}" fill="none" '
                       f'stroke="{color}" stroke-width="1.5"/>')
        if label:
            ly = _MARGIN_T + 16 + 16 * idx
            out.append(f'<line x1="{_WIDTH - 170}" y1="{ly - 4}" '
                       f'x2="{_WIDTH - 150}" y2="{ly - 4}" stroke="{color}" '
                       f'stroke-width="2"/>')
            out.append(f'<text x="{_WIDTH - 144}" y="{ly}" font-family="monospace" '
                       f'font-size="11">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def line_plot(series, xlabel="", ylabel="", title="", logx=False, logy=False):
    """series: list of (xs, ys, label) triples; returns the SVG text."""
    return _render(series, xlabel, ylabel, title, logx, logy, scatter=False)


def scatter_plot(series, xlabel="", ylabel="", title="", logx=False, logy=False):
    return _render(series, xlabel, ylabel, title, logx, logy, scatter=True)


def write_svg(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
