"""Static SVG figures: single traces with annotation bands, and cohort stacks.

Output is a pure function of the input: no timestamps, ids or randomness
end up in the markup, so identical inputs give byte-identical files.
"""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .cohort import Band, CohortStack
from .engine import IntensityTrace
from .formats import format_instant

WIDTH = 960
HEIGHT = 320
MARGIN_LEFT = 56
MARGIN_RIGHT = 16
MARGIN_TOP = 24
MARGIN_BOTTOM = 40

BAND_COLORS = {"red": "#d62728", "green": "#2ca02c", "yellow": "#ffd700"}
BAND_OPACITY = "0.25"
LINE_COLOR = "#1f4e79"
TOP_LINE_COLOR = "#000000"
# tab20-like palette cycled across subjects
PALETTE = (
    "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c", "#98df8a",
    "#d62728", "#ff9896", "#9467bd", "#c5b0d5", "#8c564b", "#c49c94",
    "#e377c2", "#f7b6d2", "#7f7f7f", "#c7c7c7", "#bcbd22", "#dbdb8d",
    "#17becf", "#9edae5",
)


def _num(x: float) -> str:
    return f"{x:.3f}"


class Axes:
    """Maps data coordinates (epoch seconds, value) onto the plot area."""

    def __init__(self, t0: float, t1: float, y0: float, y1: float):
        self.t0, self.t1 = t0, t1 if t1 > t0 else t0 + 1.0
        self.y0, self.y1 = y0, y1 if y1 > y0 else y0 + 1.0
        self.left = MARGIN_LEFT
        self.right = WIDTH - MARGIN_RIGHT
        self.top = MARGIN_TOP
        self.bottom = HEIGHT - MARGIN_BOTTOM

    def x(self, t):
        t = np.asarray(t, dtype=float)
        return self.left + (t - self.t0) / (self.t1 - self.t0) * (self.right - self.left)

    def y(self, v):
        v = np.asarray(v, dtype=float)
        return self.bottom - (v - self.y0) / (self.y1 - self.y0) * (self.bottom - self.top)


def _points(xs, ys) -> str:
    return " ".join(f"{_num(a)},{_num(b)}" for a, b in zip(xs, ys))


def _frame(ax: Axes, title: str) -> list[str]:
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f"<title>{escape(title)}</title>",
    ]
    out.append(
        f'<text x="{_num(ax.left)}" y="{_num(MARGIN_TOP - 8)}" font-size="13">{escape(title)}</text>'
    )
    return out


def _axes(ax: Axes, y_label: str, y_ticks: Sequence[float]) -> list[str]:
    out = [
        f'<line x1="{_num(ax.left)}" y1="{_num(ax.bottom)}" x2="{_num(ax.right)}" '
        f'y2="{_num(ax.bottom)}" stroke="#333333"/>',
        f'<line x1="{_num(ax.left)}" y1="{_num(ax.top)}" x2="{_num(ax.left)}" '
        f'y2="{_num(ax.bottom)}" stroke="#333333"/>',
    ]
    for v in y_ticks:
        y = float(ax.y(v))
        out.append(
            f'<text x="{_num(ax.left - 6)}" y="{_num(y + 4)}" text-anchor="end">{v:g}</text>'
        )
    # x ticks at whole days, thinned to at most ~10 labels
    day = 86400.0
    first = np.ceil(ax.t0 / day) * day
    days = np.arange(first, ax.t1 + 1e-9, day)
    step = max(1, int(np.ceil(days.size / 10)))
    for t in days[::step]:
        x = float(ax.x(t))
        out.append(
            f'<line x1="{_num(x)}" y1="{_num(ax.bottom)}" x2="{_num(x)}" y2="{_num(ax.bottom + 4)}" stroke="#333333"/>'
        )
        out.append(
            f'<text x="{_num(x)}" y="{_num(ax.bottom + 16)}" text-anchor="middle">{format_instant(t)[:10]}</text>'
        )
    out.append(
        f'<text x="14" y="{_num((ax.top + ax.bottom) / 2)}" text-anchor="middle" '
        f'transform="rotate(-90 14 {_num((ax.top + ax.bottom) / 2)})">{escape(y_label)}</text>'
    )
    return out


def trace_extent(trace: IntensityTrace) -> tuple[float, float]:
    """Time range drawn for a trace: first centre to last centre plus one stride."""
    stride = trace.stride if len(trace) > 1 or trace.spec is not None else 0.0
    return float(trace.centers[0]), float(trace.centers[-1]) + stride


def band_rect(ax: Axes, label: str, band: Band) -> str:
    x0 = float(ax.x(band.start))
    x1 = float(ax.x(band.end))
    return (
        f'<rect class="band band-{label}" x="{_num(x0)}" y="{_num(ax.top)}" '
        f'width="{_num(x1 - x0)}" height="{_num(ax.bottom - ax.top)}" '
        f'fill="{BAND_COLORS.get(label, "#999999")}" fill-opacity="{BAND_OPACITY}" '
        f'data-start={quoteattr(format_instant(band.start))} '
        f'data-end={quoteattr(format_instant(band.end))}/>'
    )


def render_line(
    trace: IntensityTrace,
    bands: Sequence[tuple[str, Band]] = (),
    title: str | None = None,
) -> str:
    """One trace as a polyline on a [0, 1] axis, with optional band rectangles."""
    t0, t1 = trace_extent(trace)
    ax = Axes(t0, t1, 0.0, 1.0)
    title = title if title is not None else (trace.subject_id or "periodicity intensity")
    out = _frame(ax, title)
    for label, band in bands:
        out.append(band_rect(ax, label, band))
    out.extend(_axes(ax, "normalised intensity", (0.0, 0.5, 1.0)))
    out.append(
        f'<polyline class="trace" fill="none" stroke="{LINE_COLOR}" stroke-width="1.2" '
        f'points="{_points(ax.x(trace.centers), ax.y(trace.intensities))}"/>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_stacked(stack: CohortStack, title: str = "stacked periodicity intensity") -> str:
    """Cumulative per-subject areas with the cohort top line drawn on top."""
    grid = stack.grid
    stride = float(grid[1] - grid[0]) if grid.size > 1 else 0.0
    cum = stack.cumulative
    top = stack.top_line
    ymax = float(top.max()) if top.size and top.max() > 0 else 1.0
    ax = Axes(float(grid[0]), float(grid[-1]) + stride, 0.0, ymax)
    out = _frame(ax, title)
    xs = ax.x(grid)
    lower = np.zeros_like(grid)
    for i, subject in enumerate(stack.subjects):
        upper = cum[i]
        pts = _points(np.concatenate([xs, xs[::-1]]), np.concatenate([ax.y(upper), ax.y(lower)[::-1]]))
        out.append(
            f'<polygon class="subject" data-subject={quoteattr(subject)} '
            f'fill="{PALETTE[i % len(PALETTE)]}" stroke="none" points="{pts}"/>'
        )
        lower = upper
    ticks = (0.0, round(ymax / 2, 3), round(ymax, 3))
    out.extend(_axes(ax, "cumulative normalised intensity", ticks))
    out.append(
        f'<polyline class="top-line" fill="none" stroke="{TOP_LINE_COLOR}" stroke-width="2" '
        f'points="{_points(xs, ax.y(top))}"/>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
