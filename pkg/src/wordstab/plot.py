"""Dependency-free SVG charts: bucket line charts and grouped box summaries.

Output is deterministic text so charts can be diffed in tests.
"""

from __future__ import annotations

import csv
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .errors import DataError

PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]

WIDTH, HEIGHT = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 60, 170, 30, 50


def read_bucket_csv(path) -> list[tuple[float, float]]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"bucket_upper", "percent"} <= set(reader.fieldnames):
            raise DataError(f"{path}: expected header 'bucket_upper,percent'")
        pts = [(float(r["bucket_upper"]), float(r["percent"])) for r in reader]
    if not pts:
        raise DataError(f"{path}: no buckets")
    return pts


def read_grouped_tsv(path) -> dict[str, list[float]]:
    """TSV ``group<TAB>value`` with a header row."""
    groups: dict[str, list[float]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        next(fh, None)
        for line in fh:
            parts = line.rstrip("\r\n").split("\t")
            if len(parts) < 2:
                continue
            groups.setdefault(parts[0], []).append(float(parts[1]))
    return groups


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _Canvas:
    def __init__(self, width=WIDTH, height=HEIGHT):
        self.width = width
        self.height = height
        self.parts: list[str] = []

    def add(self, s: str):
        self.parts.append(s)

    def text(self, x, y, s, anchor="middle", size=12, extra=""):
        self.add(f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{size}" text-anchor="{anchor}"{extra}>'
                 f"{escape(str(s))}</text>")

    def line(self, x1, y1, x2, y2, stroke="#000", width=1):
        self.add(f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
                 f'stroke="{stroke}" stroke-width="{width}"/>')

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
                f'viewBox="0 0 {self.width} {self.height}" font-family="sans-serif">')
        return "\n".join([head, f'<rect width="{self.width}" height="{self.height}" fill="#fff"/>',
                          *self.parts, "</svg>"]) + "\n"


def _nice_max(v: float) -> float:
    if v <= 0:
        return 1.0
    for step in (1, 2, 5, 10, 20, 25, 50, 100):
        top = step * np.ceil(v / step)
        if top / step <= 10:
            return float(top)
    return float(v)


def line_chart(series: Mapping[str, Sequence[tuple[float, float]]], title: str = "",
               xlabel: str = "stability bucket (%)", ylabel: str = "% of words") -> str:
    """One polyline per series over x in [0, 100], with a legend."""
    if not series:
        raise DataError("no series to plot")
    for label, pts in series.items():
        if len(pts) == 0:
            raise DataError(f"series {label!r} is empty")
    c = _Canvas()
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM
    ymax = _nice_max(max(y for pts in series.values() for _, y in pts))

    def sx(x):
        return LEFT + pw * x / 100.0

    def sy(y):
        return TOP + ph * (1.0 - y / ymax)

    c.line(LEFT, TOP + ph, LEFT + pw, TOP + ph)
    c.line(LEFT, TOP, LEFT, TOP + ph)
    for t in range(0, 101, 10):
        c.line(sx(t), TOP + ph, sx(t), TOP + ph + 4)
        c.text(sx(t), TOP + ph + 16, t, size=10)
    for i in range(6):
        yv = ymax * i / 5
        c.line(LEFT - 4, sy(yv), LEFT, sy(yv))
        c.text(LEFT - 6, sy(yv) + 3, f"{yv:g}", anchor="end", size=10)
    c.text(LEFT + pw / 2, HEIGHT - 10, xlabel)
    c.text(14, TOP + ph / 2, ylabel, extra=f' transform="rotate(-90 14 {_fmt(TOP + ph / 2)})"')
    if title:
        c.text(LEFT + pw / 2, 18, title, size=14)
    for i, (label, pts) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in pts)
        c.add(f'<polyline class="series" fill="none" stroke="{color}" stroke-width="2" points="{coords}">'
              f"<title>{escape(label)}</title></polyline>")
        ly = TOP + 10 + 18 * i
        c.line(LEFT + pw + 15, ly, LEFT + pw + 35, ly, stroke=color, width=2)
        c.text(LEFT + pw + 40, ly + 4, label, anchor="start", size=11, extra=' class="legend"')
    return c.render()


def box_chart(groups: Mapping[str, Sequence[float]], title: str = "",
              ylabel: str = "average stability") -> str:
    """Box-style summary (min, quartiles, median, max) per group."""
    if not groups:
        raise DataError("no groups to plot")
    for label, vals in groups.items():
        if len(vals) == 0:
            raise DataError(f"group {label!r} is empty")
    c = _Canvas()
    pw, ph = WIDTH - LEFT - 30, HEIGHT - TOP - BOTTOM - 40
    allv = np.concatenate([np.asarray(v, dtype=float) for v in groups.values()])
    lo, hi = float(allv.min()), float(allv.max())
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    def sy(y):
        return TOP + ph * (1.0 - (y - lo) / (hi - lo))

    c.line(LEFT, TOP, LEFT, TOP + ph)
    c.line(LEFT, TOP + ph, LEFT + pw, TOP + ph)
    for i in range(6):
        yv = lo + (hi - lo) * i / 5
        c.line(LEFT - 4, sy(yv), LEFT, sy(yv))
        c.text(LEFT - 6, sy(yv) + 3, f"{yv:.3g}", anchor="end", size=10)
    c.text(14, TOP + ph / 2, ylabel, extra=f' transform="rotate(-90 14 {_fmt(TOP + ph / 2)})"')
    if title:
        c.text(LEFT + pw / 2, 18, title, size=14)
    slot = pw / len(groups)
    for i, (label, vals) in enumerate(groups.items()):
        v = np.asarray(vals, dtype=float)
        q0, q1, q2, q3, q4 = np.percentile(v, [0, 25, 50, 75, 100])
        cx = LEFT + slot * (i + 0.5)
        half = min(30.0, slot * 0.3)
        color = PALETTE[i % len(PALETTE)]
        c.add(f'<g class="box"><title>{escape(label)} (n={len(v)})</title>')
        c.line(cx, sy(q0), cx, sy(q1))
        c.line(cx, sy(q3), cx, sy(q4))
        c.line(cx - half / 2, sy(q0), cx + half / 2, sy(q0))
        c.line(cx - half / 2, sy(q4), cx + half / 2, sy(q4))
        c.add(f'<rect x="{_fmt(cx - half)}" y="{_fmt(sy(q3))}" width="{_fmt(2 * half)}" '
              f'height="{_fmt(max(sy(q1) - sy(q3), 0.5))}" fill="{color}" fill-opacity="0.4" stroke="{color}"/>')
        c.line(cx - half, sy(q2), cx + half, sy(q2), stroke="#000", width=2)
        c.add("</g>")
        c.text(cx, TOP + ph + 16, f"{label} (n={len(v)})", size=10)
    return c.render()
