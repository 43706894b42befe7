"""Sliding-window periodicity intensity.

Slide a window of ``spec.window_length`` across the series in steps of
``spec.stride``; each window contributes one intensity value, the band
energy around the target frequency, stamped at the window centre.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import partial
from typing import Iterable

import numpy as np

from .errors import EmptyTrace
from .spectrum import MIN_SAMPLES, band_energy, fft_periodogram, lomb_scargle_power, periodogram
from .timeseries import (
    HOUR,
    TimeSeries,
    WindowSpec,
    is_evenly_sampled,
    median_gap,
    plan_windows,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class IntensityTrace:
    centers: np.ndarray
    intensities: np.ndarray
    coverage: np.ndarray
    spec: WindowSpec | None = None
    subject_id: str = ""
    normalized: bool = False

    def __post_init__(self):
        arrays = []
        for name in ("centers", "intensities", "coverage"):
            arr = np.array(getattr(self, name), dtype=float, copy=True).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
            arrays.append(arr)
        if not arrays[0].size == arrays[1].size == arrays[2].size:
            raise ValueError("centers, intensities and coverage differ in length")

    def __len__(self) -> int:
        return int(self.centers.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntensityTrace):
            return NotImplemented
        return (
            np.array_equal(self.centers, other.centers)
            and np.array_equal(self.intensities, other.intensities)
            and np.array_equal(self.coverage, other.coverage)
            and self.spec == other.spec
            and self.subject_id == other.subject_id
            and self.normalized == other.normalized
        )

    __hash__ = None

    @property
    def stride(self) -> float:
        if self.spec is not None:
            return self.spec.stride
        if len(self) < 2:
            raise ValueError("stride is undefined for a trace without spec and < 2 points")
        return float(np.median(np.diff(self.centers)))


def expected_samples(series: TimeSeries, spec: WindowSpec) -> float:
    """Samples a fully covered window would hold, from the series' median gap."""
    gap = median_gap(series.timestamps)
    if not gap > 0:
        return 1.0
    return spec.window_length / gap


def window_intensity(
    window: TimeSeries,
    spec: WindowSpec,
    candidates: Iterable[float] = (),
) -> float:
    """Band energy of one window with the estimator chosen by ``spec.method``.

    An ``fft`` spec falls back to Lomb-Scargle when the window is not evenly
    sampled.
    """
    if spec.method == "fft" and is_evenly_sampled(window.timestamps):
        return band_energy(fft_periodogram(window), spec)
    return band_energy(partial(lomb_scargle_power, window), spec, candidates)


def compute_intensity_trace(
    series: TimeSeries,
    spec: WindowSpec,
    subject_id: str = "",
    candidates: Iterable[float] = (),
) -> IntensityTrace:
    """Periodicity intensity of every planned window of ``series``.

    Windows holding fewer than ``spec.min_coverage`` of the expected number
    of samples (or fewer than 8 samples) emit intensity 0, alongside their
    coverage, instead of an unreliable estimate.

    Raises
    ------
    SpanTooShort
        The series is shorter than one window.
    """
    plan = plan_windows(series, spec)
    ts = series.timestamps
    lo = np.searchsorted(ts, plan.window_starts, side="left")
    hi = np.searchsorted(ts, plan.window_ends, side="left")
    expected = expected_samples(series, spec)
    candidates = tuple(candidates)

    intensities = np.zeros(plan.count)
    coverage = np.minimum((hi - lo) / expected, 1.0)
    # an evenly sampled series has evenly sampled windows; skip per-window checks
    all_even = spec.method == "fft" and is_evenly_sampled(ts)
    dt_hours = median_gap(ts) / HOUR
    fallbacks = 0
    for k in range(plan.count):
        a, b = int(lo[k]), int(hi[k])
        if coverage[k] < spec.min_coverage or b - a < MIN_SAMPLES:
            continue
        if all_even:
            intensities[k] = band_energy(periodogram(series.values[a:b], dt_hours), spec)
            continue
        window = TimeSeries(ts[a:b], series.values[a:b])
        if spec.method == "fft" and not is_evenly_sampled(window.timestamps):
            fallbacks += 1
        intensities[k] = window_intensity(window, spec, candidates)
    if fallbacks:
        log.info("%d of %d windows were uneven; used Lomb-Scargle", fallbacks, plan.count)

    return IntensityTrace(plan.window_centers, intensities, coverage, spec, subject_id)


def normalize_trace(trace: IntensityTrace) -> IntensityTrace:
    """Min-max scale intensities to [0, 1]; a constant trace maps to all zeros."""
    if len(trace) == 0:
        raise EmptyTrace("cannot normalise an empty trace")
    x = trace.intensities
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        out = np.zeros_like(x)
    else:
        out = (x - lo) / (hi - lo)
        # keep interior values strictly inside (0, 1) so rounding can never
        # create a new earliest extreme
        out = np.clip(out, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
        out[x == lo] = 0.0
        out[x == hi] = 1.0
    return replace(trace, intensities=out, normalized=True)
