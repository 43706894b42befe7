"""Spectral power at and around a target frequency.

Two estimators share one convention: values are mean-detrended and no
taper is applied.

* :func:`fft_periodogram` for evenly sampled windows, power ``|X_k|^2 / n``.
* :func:`lomb_scargle_power` for arbitrary sampling, in the classical
  unnormalised form (half the least-squares reduction in residual sum of
  squares achieved by a sinusoid at the given frequency).

On an evenly sampled window, and a grid frequency strictly between 0 and
Nyquist, both give the same number.

Frequencies are in cycles per hour throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Union

import numpy as np

from .errors import (
    EmptyInput,
    EmptySpectrum,
    NonPositiveFrequency,
    TooFewSamples,
    UnevenSampling,
)
from .timeseries import HOUR, TimeSeries, WindowSpec, is_evenly_sampled, median_gap

MIN_SAMPLES = 8


@dataclass(frozen=True, eq=False)
class Spectrum:
    frequencies: np.ndarray  # cycles/hour, strictly increasing
    powers: np.ndarray

    @property
    def total_power(self) -> float:
        return float(np.sum(self.powers))

    @property
    def periods(self) -> np.ndarray:
        """Periods in hours."""
        return 1.0 / self.frequencies


def detrend_mean(values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise EmptyInput("cannot detrend an empty sequence")
    if values.min() == values.max():
        # the rounded mean of a constant can leave ~1e-16 residue
        return np.zeros_like(values)
    return values - values.mean()


def fft_periodogram(window: TimeSeries) -> Spectrum:
    """Periodogram of an evenly sampled window.

    Returns the bins ``k = 1 .. n // 2`` at frequencies ``k / (n * dt)``.

    Raises
    ------
    TooFewSamples
        Fewer than 8 samples.
    UnevenSampling
        Some gap deviates from the median gap by more than 1 %.
    """
    n = len(window)
    if n < MIN_SAMPLES:
        raise TooFewSamples(f"need at least {MIN_SAMPLES} samples, got {n}")
    if not is_evenly_sampled(window.timestamps):
        raise UnevenSampling("window is not evenly sampled")
    return periodogram(window.values, median_gap(window.timestamps) / HOUR)


def periodogram(values: np.ndarray, dt_hours: float) -> Spectrum:
    """Unchecked periodogram of samples taken every ``dt_hours``."""
    n = len(values)
    y = detrend_mean(values)
    coeffs = np.fft.rfft(y)[1 : n // 2 + 1]
    powers = (coeffs.real**2 + coeffs.imag**2) / n
    freqs = np.arange(1, n // 2 + 1, dtype=float) / (n * dt_hours)
    return Spectrum(freqs, powers)


def lomb_scargle_power(window: TimeSeries, frequency: float) -> float:
    """Classical Lomb-Scargle power of ``window`` at ``frequency`` (cycles/hour)."""
    n = len(window)
    if n < MIN_SAMPLES:
        raise TooFewSamples(f"need at least {MIN_SAMPLES} samples, got {n}")
    if not frequency > 0:
        raise NonPositiveFrequency(f"frequency must be positive, got {frequency!r}")
    t = (window.timestamps - window.timestamps[0]) / HOUR
    y = detrend_mean(window.values)
    omega = 2.0 * np.pi * frequency

    two_wt = 2.0 * omega * t
    tau = np.arctan2(np.sum(np.sin(two_wt)), np.sum(np.cos(two_wt))) / (2.0 * omega)
    arg = omega * (t - tau)
    c = np.cos(arg)
    s = np.sin(arg)

    cc = float(np.dot(c, c))
    ss = float(np.dot(s, s))
    yc = float(np.dot(y, c))
    ys = float(np.dot(y, s))
    # a vanishing quadrature term (e.g. exactly at Nyquist) carries no power
    eps = 1e-12 * n
    power = 0.0
    if cc > eps:
        power += yc * yc / cc
    if ss > eps:
        power += ys * ys / ss
    return 0.5 * power


PowerEvaluator = Callable[[float], float]


def band_frequencies(frequencies: np.ndarray, spec: WindowSpec) -> np.ndarray:
    """Boolean mask of grid frequencies whose period is within tolerance."""
    target = spec.target_period / HOUR
    tol = spec.period_tolerance / HOUR
    with np.errstate(divide="ignore"):
        periods = 1.0 / np.asarray(frequencies, dtype=float)
    return np.abs(target - periods) < tol


def band_energy(
    source: Union[Spectrum, PowerEvaluator],
    spec: WindowSpec,
    candidates: Iterable[float] = (),
) -> float:
    """Energy carried by the target frequency and its close neighbours.

    With a :class:`Spectrum`, sum the powers of every grid frequency whose
    period is within ``spec.period_tolerance`` of ``spec.target_period``;
    when none qualifies, the grid frequency with the nearest period stands
    in so the result is never vacuously zero.

    With a callable ``power(frequency)`` (e.g. a bound Lomb-Scargle
    evaluator), evaluate it at the target frequency plus any ``candidates``
    within tolerance and sum.
    """
    if isinstance(source, Spectrum):
        freqs = source.frequencies
        if freqs.size == 0:
            raise EmptySpectrum("spectrum has no frequencies")
        mask = band_frequencies(freqs, spec)
        if not mask.any():
            nearest = int(np.argmin(np.abs(spec.target_period / HOUR - 1.0 / freqs)))
            return float(source.powers[nearest])
        return float(np.sum(source.powers[mask]))

    fo = spec.target_frequency
    total = float(source(fo))
    cands = np.asarray(sorted(set(float(f) for f in candidates if f > 0 and f != fo)))
    if cands.size:
        for f in cands[band_frequencies(cands, spec)]:
            total += float(source(float(f)))
    return total
