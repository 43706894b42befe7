"""Turn event logs and tri-axial accelerometer streams into scalar series.

Event logs are counted into fixed-width bins and fused by summation.
Accelerometer streams go through the movement chain::

    signal vector magnitude -> Butterworth band-pass -> |x| -> per-bucket mean
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import signal

from .errors import GridMismatch, InvalidCutoffs, InvalidRange, RateMismatch
from .timeseries import DAY, MINUTE, TimeSeries, median_gap

log = logging.getLogger(__name__)

DEFAULT_BIN_WIDTH = 15 * MINUTE
MAX_CUTOFF_FRACTION = 0.45
# a gap longer than this many nominal sample periods splits the filter run
SEGMENT_BREAK = 1.5


@dataclass(frozen=True, eq=False)
class EventLog:
    """Timestamped events from one or more streams for a single subject."""

    timestamps: np.ndarray
    stream_ids: tuple = ()
    weights: np.ndarray | None = None
    subject_id: str = ""

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=float).reshape(-1)
        ws = (
            np.ones_like(ts)
            if self.weights is None
            else np.asarray(self.weights, dtype=float).reshape(-1)
        )
        ids = tuple(self.stream_ids) if self.stream_ids else ("",) * ts.size
        if not ts.size == ws.size == len(ids):
            raise ValueError("timestamps, stream_ids and weights differ in length")
        if np.any(ws < 0):
            raise ValueError("event weights must be non-negative")
        order = np.argsort(ts, kind="stable")
        ts, ws = ts[order], ws[order]
        ids = tuple(ids[i] for i in order)
        ts.setflags(write=False)
        ws.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "stream_ids", ids)

    def __len__(self) -> int:
        return int(self.timestamps.size)

    @property
    def streams(self) -> list[str]:
        return sorted(set(self.stream_ids))

    def select(self, stream_id: str) -> "EventLog":
        keep = np.array([s == stream_id for s in self.stream_ids], dtype=bool)
        return EventLog(
            self.timestamps[keep],
            tuple(s for s in self.stream_ids if s == stream_id),
            self.weights[keep],
            self.subject_id,
        )


@dataclass(frozen=True, eq=False)
class TriaxialSeries:
    timestamps: np.ndarray
    xyz: np.ndarray  # shape (n, 3), g units
    nominal_rate: float

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=float).reshape(-1)
        xyz = np.asarray(self.xyz, dtype=float).reshape(-1, 3)
        if ts.size != xyz.shape[0]:
            raise ValueError("timestamps and xyz differ in length")
        if not self.nominal_rate > 0:
            raise ValueError("nominal_rate must be positive")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "xyz", xyz)

    def __len__(self) -> int:
        return int(self.timestamps.size)


@dataclass(frozen=True, eq=False)
class FilterDesign:
    order: int
    low_cutoff: float
    high_cutoff: float
    sample_rate: float
    sos: np.ndarray  # (sections, 6) rows of b0 b1 b2 a0 a1 a2
    warnings: tuple[str, ...] = field(default=())

    @property
    def center_frequency(self) -> float:
        """Digital frequency mapped onto the analog geometric band centre."""
        fs = self.sample_rate
        wl = math.tan(math.pi * self.low_cutoff / fs)
        wh = math.tan(math.pi * self.high_cutoff / fs)
        return fs / math.pi * math.atan(math.sqrt(wl * wh))

    def response(self, freqs) -> np.ndarray:
        """Complex frequency response at ``freqs`` (Hz)."""
        z = np.exp(-2j * np.pi * np.asarray(freqs, dtype=float) / self.sample_rate)
        h = np.ones_like(z)
        for b0, b1, b2, a0, a1, a2 in self.sos:
            h = h * (b0 + b1 * z + b2 * z * z) / (a0 + a1 * z + a2 * z * z)
        return h


# ---------------------------------------------------------------- events


def bin_events(log_: EventLog, bin_width: float, start: float, end: float) -> TimeSeries:
    """Sum event weights into bins ``[start + k*w, start + (k+1)*w)`` up to ``end``.

    Empty bins hold a real zero.
    """
    if not bin_width > 0 or not end > start:
        raise InvalidRange(f"need end > start and bin_width > 0 (got {start}, {end}, {bin_width})")
    n = int(math.ceil((end - start) / bin_width - 1e-9))
    edges = start + np.arange(n, dtype=float) * bin_width
    ts = log_.timestamps
    inside = (ts >= start) & (ts < end)
    idx = np.floor((ts[inside] - start) / bin_width).astype(np.int64)
    idx = np.clip(idx, 0, n - 1)
    counts = np.bincount(idx, weights=log_.weights[inside], minlength=n)
    return TimeSeries(edges, counts, "events/bin")


def fuse_streams(series: Sequence[TimeSeries]) -> TimeSeries:
    """Pointwise sum of series binned on one shared grid."""
    if not series:
        raise GridMismatch("nothing to fuse")
    grid = series[0].timestamps
    total = np.zeros_like(series[0].values)
    for s in series:
        if not np.array_equal(s.timestamps, grid):
            raise GridMismatch("series do not share the same timestamps")
        total = total + s.values
    return TimeSeries(grid, total, series[0].unit_label)


def events_to_series(
    logs: Sequence[EventLog],
    bin_width: float = DEFAULT_BIN_WIDTH,
    start: float | None = None,
    end: float | None = None,
) -> TimeSeries:
    """Bin every stream of every log on one grid and fuse them.

    Without explicit bounds the grid starts at UTC midnight before the first
    event, so series of different subjects share a phase, and ends with the
    bin holding the last event.
    """
    all_ts = np.concatenate([lg.timestamps for lg in logs]) if logs else np.array([])
    if start is None or end is None:
        if all_ts.size == 0:
            raise InvalidRange("no events and no explicit range")
        if start is None:
            start = math.floor(all_ts.min() / DAY) * DAY
        if end is None:
            end = start + (math.floor((all_ts.max() - start) / bin_width) + 1) * bin_width
    parts = []
    for lg in logs:
        for sid in lg.streams:
            parts.append(bin_events(lg.select(sid), bin_width, start, end))
    if not parts:
        return bin_events(EventLog(np.array([])), bin_width, start, end)
    return fuse_streams(parts)


# ---------------------------------------------------------- accelerometer


def signal_vector_magnitude(raw: TriaxialSeries) -> TimeSeries:
    """Euclidean norm of each sample; independent of sensor orientation."""
    mag = np.sqrt(np.einsum("ij,ij->i", raw.xyz, raw.xyz))
    return TimeSeries(raw.timestamps, mag, "g")


def design_bandpass(order: int, low: float, high: float, rate: float) -> FilterDesign:
    """Digital Butterworth band-pass as cascaded second-order sections.

    The analog prototype of the given ``order`` is mapped with the bilinear
    transform, pre-warping both edges, so the response is -3 dB exactly at
    the cutoffs. A ``high`` cutoff above 0.45 * ``rate`` is clamped there
    with a warning, which is also recorded on the returned design.
    """
    if not (order >= 1 and rate > 0 and 0 < low < high):
        raise InvalidCutoffs(f"need order >= 1, rate > 0 and 0 < low < high (got {low}, {high}, {rate})")
    notes = []
    limit = MAX_CUTOFF_FRACTION * rate
    if high > limit:
        msg = (
            f"high cutoff {high:g} Hz exceeds {MAX_CUTOFF_FRACTION:g} x sample rate "
            f"{rate:g} Hz; clamped to {limit:g} Hz"
        )
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)
        high = limit
    if not low < high:
        raise InvalidCutoffs(f"low cutoff {low:g} Hz is not below the usable band edge {high:g} Hz")
    sos = signal.butter(order, [low, high], btype="bandpass", fs=rate, output="sos")
    sos.setflags(write=False)
    return FilterDesign(int(order), float(low), float(high), float(rate), sos, tuple(notes))


def contiguous_segments(timestamps: np.ndarray, period: float) -> list[tuple[int, int]]:
    """Index ranges ``[a, b)`` separated by gaps longer than 1.5 sample periods."""
    if timestamps.size == 0:
        return []
    breaks = np.nonzero(np.diff(timestamps) > SEGMENT_BREAK * period)[0] + 1
    bounds = np.concatenate([[0], breaks, [timestamps.size]])
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]


def apply_filter(design: FilterDesign, series: TimeSeries) -> TimeSeries:
    """Causal single-pass filtering of each gap-free run of samples.

    The filter state restarts after every gap, so missing data stays missing
    instead of being bridged.

    Raises
    ------
    RateMismatch
        The median sample interval differs from ``1 / design.sample_rate``
        by more than 1 %.
    """
    period = 1.0 / design.sample_rate
    if len(series) > 1:
        gap = median_gap(series.timestamps)
        if abs(gap - period) > 0.01 * period:
            raise RateMismatch(
                f"series sampled at {1 / gap:g} Hz, filter designed for {design.sample_rate:g} Hz"
            )
    out = np.empty(len(series))
    for a, b in contiguous_segments(series.timestamps, period):
        # sosfilt needs writable buffers for both coefficients and data
        out[a:b] = signal.sosfilt(np.array(design.sos), np.array(series.values[a:b]))
    return series.with_values(out)


def rectify_abs(series: TimeSeries) -> TimeSeries:
    return series.with_values(np.abs(series.values))


def mean_downsample(series: TimeSeries, bucket: float) -> TimeSeries:
    """Mean of each non-empty bucket ``[k*bucket, (k+1)*bucket)``, stamped at its start.

    Buckets are aligned to multiples of ``bucket`` since the epoch; empty
    buckets produce no sample.
    """
    if not bucket > 0:
        raise InvalidRange("bucket must be positive")
    if len(series) == 0:
        return series
    keys = np.floor(series.timestamps / bucket).astype(np.int64)
    uniq, first, counts = np.unique(keys, return_index=True, return_counts=True)
    # np.unique sorts keys; timestamps are sorted, so reduceat segments line up
    sums = np.add.reduceat(series.values, first)
    return TimeSeries(uniq.astype(float) * bucket, sums / counts, series.unit_label)


def accelerometer_pipeline(
    raw: TriaxialSeries,
    low: float = 0.5,
    high: float = 20.0,
    order: int = 4,
    bucket: float = 60.0,
) -> tuple[TimeSeries, FilterDesign]:
    """Movement series from raw accelerometry, plus the filter that was used."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        design = design_bandpass(order, low, high, raw.nominal_rate)
    # surfaced through design.warnings; callers decide how to report them
    for w in caught:
        log.info("%s", w.message)
    svm = signal_vector_magnitude(raw)
    filtered = apply_filter(design, svm)
    movement = mean_downsample(rectify_abs(filtered), bucket)
    return movement.with_values(movement.values, "g mean |bp(SVM)|"), design
