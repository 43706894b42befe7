"""Core data types and window planning.

All instants are float seconds since the Unix epoch (UTC) and all
durations are float seconds. Helpers ``HOUR``/``DAY``/``MINUTE`` keep call
sites readable::

    spec = WindowSpec(target_period=24 * HOUR, window_length=7 * DAY, stride=HOUR)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySeries, InvalidSpec, NonMonotonic, SpanTooShort

log = logging.getLogger(__name__)

SECOND = 1.0
MINUTE = 60.0
HOUR = 3600.0
DAY = 86400.0

METHODS = ("lomb-scargle", "fft")

# max relative deviation of any inter-sample gap from the median gap
EVEN_JITTER = 0.01


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Timestamped scalar samples, possibly irregularly spaced.

    Construction only coerces and checks lengths; use :func:`validate_series`
    to enforce ordering and finiteness.
    """

    timestamps: np.ndarray
    values: np.ndarray
    unit_label: str = ""

    def __post_init__(self):
        ts = _frozen_array(self.timestamps)
        vs = _frozen_array(self.values)
        if ts.shape != vs.shape:
            raise ValueError(
                f"timestamps and values differ in length ({ts.size} != {vs.size})"
            )
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vs)

    def __len__(self) -> int:
        return int(self.timestamps.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.unit_label == other.unit_label
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    @property
    def span(self) -> float:
        if len(self) == 0:
            return 0.0
        return float(self.timestamps[-1] - self.timestamps[0])

    def with_values(self, values, unit_label: str | None = None) -> "TimeSeries":
        return TimeSeries(
            self.timestamps,
            values,
            self.unit_label if unit_label is None else unit_label,
        )


@dataclass(frozen=True)
class ValidationReport:
    dropped_nonfinite: int = 0
    duplicates_collapsed: int = 0
    reordered: bool = False


def validate_series(raw: TimeSeries, return_report: bool = False):
    """Return a copy of ``raw`` that satisfies every TimeSeries invariant.

    Samples with a non-finite timestamp or value are dropped. Samples are
    stably sorted by time, and samples sharing a timestamp are replaced by
    one sample carrying their mean value.

    Parameters
    ----------
    raw : TimeSeries
    return_report : bool, optional
        Also return a :class:`ValidationReport` with the drop/collapse counts.

    Raises
    ------
    EmptySeries
        No finite samples remain.
    NonMonotonic
        Timestamps still not strictly increasing after collapsing ties.
    """
    ts = np.asarray(raw.timestamps, dtype=float)
    vs = np.asarray(raw.values, dtype=float)
    keep = np.isfinite(ts) & np.isfinite(vs)
    dropped = int(keep.size - np.count_nonzero(keep))
    ts, vs = ts[keep], vs[keep]
    if ts.size == 0:
        raise EmptySeries("no finite samples in series")

    reordered = bool(np.any(np.diff(ts) < 0))
    if reordered:
        order = np.argsort(ts, kind="stable")
        ts, vs = ts[order], vs[order]

    uniq, first, counts = np.unique(ts, return_index=True, return_counts=True)
    duplicates = int(ts.size - uniq.size)
    if duplicates:
        sums = np.add.reduceat(vs, first)
        vs = sums / counts
        ts = uniq

    if ts.size > 1 and not np.all(np.diff(ts) > 0):
        raise NonMonotonic("timestamps are not strictly increasing after collapse")

    if dropped:
        log.warning("dropped %d non-finite samples", dropped)
    if duplicates:
        log.info("collapsed %d duplicate timestamps by mean", duplicates)

    out = TimeSeries(ts, vs, raw.unit_label)
    report = ValidationReport(dropped, duplicates, reordered)
    return (out, report) if return_report else out


def median_gap(timestamps: np.ndarray) -> float:
    gaps = np.diff(np.asarray(timestamps, dtype=float))
    if gaps.size == 0:
        return float("nan")
    return float(np.median(gaps))


def is_evenly_sampled(timestamps: np.ndarray, jitter: float = EVEN_JITTER) -> bool:
    """True when every gap is within ``jitter`` (relative) of the median gap."""
    gaps = np.diff(np.asarray(timestamps, dtype=float))
    if gaps.size == 0:
        return False
    med = float(np.median(gaps))
    if not med > 0:
        return False
    return bool(np.max(np.abs(gaps - med)) <= jitter * med)


@dataclass(frozen=True)
class WindowSpec:
    """Parameters of the sliding-window periodicity computation.

    ``target_period`` is the reciprocal of the frequency of interest,
    ``window_length`` the duration of one analysis window and ``stride``
    the shift between consecutive windows. Neighbouring frequencies count
    towards the band when their period lies within ``period_tolerance`` of
    the target period.
    """

    target_period: float = 24 * HOUR
    window_length: float = 7 * DAY
    stride: float = HOUR
    period_tolerance: float = 0.01 * HOUR
    method: str = "fft"
    min_coverage: float = 0.1

    def __post_init__(self):
        for name in ("target_period", "window_length", "stride", "period_tolerance", "min_coverage"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidSpec(f"{name} must be finite, got {value!r}")
        if not 0 < self.target_period < self.window_length:
            raise InvalidSpec("require 0 < target_period < window_length")
        if not 0 < self.stride <= self.window_length:
            raise InvalidSpec("require 0 < stride <= window_length")
        if not self.period_tolerance > 0:
            raise InvalidSpec("period_tolerance must be positive")
        if not 0 <= self.min_coverage <= 1:
            raise InvalidSpec("min_coverage must lie in [0, 1]")
        if self.method not in METHODS:
            raise InvalidSpec(f"method must be one of {METHODS}, got {self.method!r}")

    @property
    def target_frequency(self) -> float:
        """Target frequency in cycles per hour."""
        return HOUR / self.target_period


# use-case presets: home sensors, VLE access logs, calf accelerometers
HOME_SENSORS = WindowSpec(target_period=24 * HOUR, window_length=7 * DAY, stride=HOUR)
VLE_LOGS = WindowSpec(target_period=24 * HOUR, window_length=7 * DAY, stride=3 * HOUR)
CALVES = WindowSpec(target_period=24 * HOUR, window_length=7 * DAY, stride=15 * MINUTE)
PRESETS = {"home": HOME_SENSORS, "vle": VLE_LOGS, "calves": CALVES}


@dataclass(frozen=True, eq=False)
class WindowPlan:
    window_starts: np.ndarray
    window_centers: np.ndarray
    window_length: float = field(default=0.0)

    @property
    def count(self) -> int:
        return int(self.window_starts.size)

    @property
    def window_ends(self) -> np.ndarray:
        return self.window_starts + self.window_length


def window_count(span: float, window_length: float, stride: float) -> int:
    if span < window_length:
        return 0
    # guard against (n * stride) landing a hair below an integer after division
    return int(math.floor((span - window_length) / stride + 1e-9)) + 1


def plan_windows(series: TimeSeries, spec: WindowSpec) -> WindowPlan:
    """Lay out half-open windows ``[start, start + window_length)``.

    The plan depends only on the first and last timestamps, never on the
    sample density in between.
    """
    if len(series) == 0:
        raise EmptySeries("cannot plan windows over an empty series")
    span = series.span
    count = window_count(span, spec.window_length, spec.stride)
    if count == 0:
        raise SpanTooShort(
            f"series span {span / DAY:.3f} d is shorter than the "
            f"{spec.window_length / DAY:.3f} d window"
        )
    first = float(series.timestamps[0])
    starts = first + np.arange(count, dtype=float) * spec.stride
    starts.setflags(write=False)
    centers = starts + spec.window_length / 2
    centers.setflags(write=False)
    return WindowPlan(starts, centers, spec.window_length)
