"""Align, stack, annotate and stability-check per-subject intensity traces."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .engine import IntensityTrace, normalize_trace
from .errors import (
    EmptyIntersection,
    EmptyTrace,
    SpanTooShort,
    StrideMismatch,
    TooFewSubjects,
)
from .timeseries import DAY

log = logging.getLogger(__name__)

# relative slack when matching a trace centre to a grid point
_GRID_SLACK = 1e-6
# relative slack under which two band scores count as tied
_TIE_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class CohortStack:
    subjects: tuple[str, ...]
    grid: np.ndarray
    normalized: np.ndarray  # (subjects, grid)

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.normalized, axis=0)

    @property
    def top_line(self) -> np.ndarray:
        if self.normalized.shape[0] == 0:
            return np.zeros(self.grid.size)
        return self.normalized.sum(axis=0)

    def subset(self, rows: Sequence[int]) -> "CohortStack":
        rows = list(rows)
        return CohortStack(
            tuple(self.subjects[i] for i in rows), self.grid, self.normalized[rows]
        )


@dataclass(frozen=True)
class Band:
    start: float
    end: float


@dataclass(frozen=True)
class AnnotationBands:
    lowest: Band  # drawn red
    highest: Band  # drawn green
    steepest: Band  # drawn yellow
    band_width: float

    def rows(self) -> list[tuple[str, Band]]:
        return [("red", self.lowest), ("green", self.highest), ("yellow", self.steepest)]


def _common_stride(traces: Sequence[IntensityTrace]) -> float:
    strides = [t.stride for t in traces]
    ref = strides[0]
    for s in strides[1:]:
        if abs(s - ref) > _GRID_SLACK * ref:
            raise StrideMismatch(f"traces have different strides ({ref} vs {s})")
    return ref


def _window_length(traces: Sequence[IntensityTrace], window_length: float | None) -> float:
    if window_length is not None:
        return window_length
    for t in traces:
        if t.spec is not None:
            return t.spec.window_length
    return 7 * DAY


def align_traces(
    traces: Sequence[IntensityTrace],
    start: float,
    end: float,
    window_length: float | None = None,
    normalize: bool = True,
) -> CohortStack:
    """Place each trace on a shared grid of window centres.

    The grid runs at the common stride from ``start + window/2`` up to
    ``end - window/2``. Values land on the grid point their centre matches;
    grid points a subject has no value for are 0. Each trace is min-max
    normalised first unless ``normalize`` is False.
    """
    if not traces:
        raise TooFewSubjects("no traces to align")
    if not end > start:
        raise EmptyIntersection("start must precede end")
    stride = _common_stride(traces)
    window = _window_length(traces, window_length)
    g0, g1 = start + window / 2, end - window / 2
    if g1 < g0:
        raise EmptyIntersection("range is shorter than one window")
    n = int(np.floor((g1 - g0) / stride + 1e-9)) + 1
    grid = g0 + np.arange(n, dtype=float) * stride

    rows = np.zeros((len(traces), n))
    for i, tr in enumerate(traces):
        if len(tr) == 0:
            continue
        vals = normalize_trace(tr).intensities if normalize else tr.intensities
        pos = (tr.centers - g0) / stride
        idx = np.rint(pos).astype(np.int64)
        inside = (idx >= 0) & (idx < n)
        hit = inside & (np.abs(pos - idx) <= _GRID_SLACK)
        if np.any(inside & ~hit):
            log.warning(
                "%s: %d centres fall between grid points and are dropped (trace out of phase with the grid)",
                tr.subject_id or f"subject{i}",
                int(np.sum(inside & ~hit)),
            )
        rows[i, idx[hit]] = vals[hit]
    subjects = tuple(t.subject_id or f"subject{i}" for i, t in enumerate(traces))
    return CohortStack(subjects, grid, rows)


def union_range(traces: Sequence[IntensityTrace], window_length: float | None = None) -> tuple[float, float]:
    """Start/end covering every trace, i.e. first centre - window/2 to last centre + window/2."""
    window = _window_length(traces, window_length)
    nonempty = [t for t in traces if len(t)]
    if not nonempty:
        raise EmptyTrace("all traces are empty")
    lo = min(float(t.centers[0]) for t in nonempty)
    hi = max(float(t.centers[-1]) for t in nonempty)
    return lo - window / 2, hi + window / 2


def stack(aligned: CohortStack) -> CohortStack:
    """Cumulative stacking is a view on the aligned matrix; kept for symmetry."""
    return aligned


def _earliest(scores: np.ndarray, scale: float, largest: bool) -> int:
    """First index within rounding noise of the best score.

    Running-sum band means carry errors of a few ulps, which would otherwise
    break exact ties (a ramp, a plateau) in favour of an arbitrary band.
    """
    slack = _TIE_SLACK * scale
    if largest:
        return int(np.argmax(scores >= scores.max() - slack))
    return int(np.argmax(scores <= scores.min() + slack))


def _band_means(x: np.ndarray, w: int) -> np.ndarray:
    c = np.concatenate([[0.0], np.cumsum(x)])
    return (c[w:] - c[:-w]) / w


def annotate_bands(trace: IntensityTrace, band_width: float) -> AnnotationBands:
    """Locate the lowest, highest and steepest-change bands of a trace.

    A band is ``round(band_width / stride)`` consecutive samples. Lowest and
    highest minimise/maximise the band mean; steepest maximises the absolute
    difference between the means of the band's second and first halves
    (a middle sample of an odd band belongs to neither half). Ties go to
    the earliest band.
    """
    if len(trace) == 0:
        raise EmptyTrace("cannot annotate an empty trace")
    stride = trace.stride if len(trace) > 1 or trace.spec is not None else band_width
    w = int(round(band_width / stride))
    if w < 2:
        raise SpanTooShort("band must cover at least two samples")
    x = trace.intensities
    if x.size < w:
        raise SpanTooShort(f"trace of {x.size} samples is shorter than a {w}-sample band")

    means = _band_means(x, w)
    half = w // 2
    half_means = _band_means(x, half)
    # first half starts at i, second half starts at i + w - half
    steep = np.abs(half_means[w - half :] - half_means[: means.size])

    def band(i: int) -> Band:
        s = float(trace.centers[i])
        return Band(s, s + w * stride)

    scale = float(np.max(np.abs(x)))
    return AnnotationBands(
        lowest=band(_earliest(means, scale, largest=False)),
        highest=band(_earliest(means, scale, largest=True)),
        steepest=band(_earliest(steep, scale, largest=True)),
        band_width=w * stride,
    )


@dataclass(frozen=True, eq=False)
class StabilityResult:
    groups: tuple[tuple[str, ...], ...]
    top_lines: np.ndarray  # (k, grid)
    cohort_top_line: np.ndarray
    correlations: np.ndarray  # (k,)


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation; 1 when both inputs are constant, NaN when only one is."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    da, db = a - a.mean(), b - b.mean()
    na, nb = float(np.sqrt(np.dot(da, da))), float(np.sqrt(np.dot(db, db)))
    if na == 0 and nb == 0:
        return 1.0
    if na == 0 or nb == 0:
        return float("nan")
    return float(np.clip(np.dot(da, db) / (na * nb), -1.0, 1.0))


def subgroup_stability(
    cohort: CohortStack | Sequence[IntensityTrace],
    k: int,
    seed: int,
) -> StabilityResult:
    """Split subjects into ``k`` random near-equal groups and compare top lines.

    Returns each group's top line and its Pearson correlation with the
    whole-cohort top line. A list of traces is first aligned over the union
    of their spans.
    """
    if not isinstance(cohort, CohortStack):
        traces = list(cohort)
        if not traces:
            raise TooFewSubjects("no traces given")
        cohort = align_traces(traces, *union_range(traces))
    n = len(cohort.subjects)
    if k < 2:
        raise TooFewSubjects("need at least two groups")
    if n < 2 * k:
        raise TooFewSubjects(f"{n} subjects cannot fill {k} groups of at least two")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    parts = [np.sort(p) for p in np.array_split(order, k)]
    full = cohort.top_line
    tops = np.vstack([cohort.subset(p).top_line for p in parts])
    corr = np.array([pearson(row, full) for row in tops])
    groups = tuple(tuple(cohort.subjects[i] for i in p) for p in parts)
    return StabilityResult(groups, tops, full, corr)
