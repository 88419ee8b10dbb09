"""Minimal deterministic SVG writers (no timestamps, fixed float formatting)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

_MAX_DOTS = 20000


def _fmt(v):
    return f"{v:.3f}"


class Canvas:
    def __init__(self, bounds, size=600, pad=20):
        (x0, y0), (x1, y1) = bounds
        span = max(x1 - x0, y1 - y0) or 1.0
        self.x0, self.y1 = x0, y0 + span
        self.k = (size - 2 * pad) / span
        self.pad, self.size = pad, size
        self.items = []

    def xy(self, p):
        return self.pad + (p[0] - self.x0) * self.k, self.pad + (self.y1 - p[1]) * self.k

    def dots(self, pts, r=0.8, color="#999"):
        pts = np.asarray(pts)
        if len(pts) > _MAX_DOTS:
            pts = pts[:: math.ceil(len(pts) / _MAX_DOTS)]
        for q in pts:
            x, y = self.xy(q)
            self.items.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{r}" fill="{color}"/>')

    def circle(self, c, radius, color="#36c"):
        x, y = self.xy(c)
        self.items.append(
            f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(radius * self.k)}" fill="none" '
            f'stroke="{color}" stroke-width="1"/>'
        )

    def text(self, s, x, y, size=12):
        self.items.append(f'<text x="{x}" y="{y}" font-size="{size}" font-family="sans-serif">{escape(s)}</text>')

    def render(self):
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.size}" height="{self.size}" '
                f'viewBox="0 0 {self.size} {self.size}">')
        return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>', *self.items, "</svg>"]) + "\n"


def cloud_svg(points, path, highlight=None, circles=(), title=None):
    pts = np.asarray(points)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    for c, rad in circles:
        lo = np.minimum(lo, np.asarray(c) - rad)
        hi = np.maximum(hi, np.asarray(c) + rad)
    cv = Canvas((lo, hi))
    cv.dots(pts)
    for c, rad in circles:
        cv.circle(c, rad)
    if highlight is not None and len(highlight):
        cv.dots(highlight, r=3, color="#d22")
    if title:
        cv.text(title, 10, 14)
    with open(path, "w") as fh:
        fh.write(cv.render())


def line_chart(series, path, xlabel="k", ylabel="log value", width=640, height=420):
    """``series``: list of (label, xs, ys); non-finite ys are skipped."""
    pad = 50
    xs_all = [x for _, xs, ys in series for x, y in zip(xs, ys) if math.isfinite(y)]
    ys_all = [y for _, xs, ys in series for y in ys if math.isfinite(y)]
    items = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">', '<rect width="100%" height="100%" fill="white"/>']
    if xs_all:
        x0, x1 = min(xs_all), max(xs_all)
        y0, y1 = min(ys_all), max(ys_all)
        x1 = x1 if x1 > x0 else x0 + 1
        y1 = y1 if y1 > y0 else y0 + 1

        def tx(x):
            return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

        def ty(y):
            return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

        items.append(f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>')
        items.append(f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>')
        items.append(f'<text x="{width / 2}" y="{height - 12}" font-size="12" font-family="sans-serif">{escape(xlabel)}</text>')
        items.append(f'<text x="6" y="{pad - 12}" font-size="12" font-family="sans-serif">{escape(ylabel)}</text>')
        items.append(f'<text x="{pad - 6}" y="{height - pad + 14}" font-size="10" font-family="sans-serif">{x0:g}</text>')
        items.append(f'<text x="{width - pad - 6}" y="{height - pad + 14}" font-size="10" font-family="sans-serif">{x1:g}</text>')
        items.append(f'<text x="4" y="{height - pad}" font-size="10" font-family="sans-serif">{y0:.3g}</text>')
        items.append(f'<text x="4" y="{pad + 4}" font-size="10" font-family="sans-serif">{y1:.3g}</text>')
        palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"]
        for n, (label, xs, ys) in enumerate(series):
            col = palette[n % len(palette)]
            pts = [(tx(x), ty(y)) for x, y in zip(xs, ys) if math.isfinite(y)]
            if len(pts) > 1:
                d = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in pts)
                items.append(f'<polyline points="{d}" fill="none" stroke="{col}" stroke-width="1.5"/>')
            for a, b in pts:
                items.append(f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="2.5" fill="{col}"/>')
            items.append(f'<text x="{width - pad + 4}" y="{pad + 14 * n}" font-size="11" fill="{col}" '
                         f'font-family="sans-serif">{escape(label)}</text>')
    items.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(items) + "\n")
