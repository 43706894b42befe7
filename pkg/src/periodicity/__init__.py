"""Periodicity intensity: how strongly a recurring (e.g. 24 h) pattern shows
up in successive overlapping windows of a longitudinal time series."""

from .cohort import (
    AnnotationBands,
    Band,
    CohortStack,
    StabilityResult,
    align_traces,
    annotate_bands,
    stack,
    subgroup_stability,
    union_range,
)
from .engine import IntensityTrace, compute_intensity_trace, normalize_trace
from .errors import PeriodicityError
from .preprocess import (
    EventLog,
    FilterDesign,
    TriaxialSeries,
    accelerometer_pipeline,
    apply_filter,
    bin_events,
    design_bandpass,
    events_to_series,
    fuse_streams,
    mean_downsample,
    rectify_abs,
    signal_vector_magnitude,
)
from .spectrum import Spectrum, band_energy, detrend_mean, fft_periodogram, lomb_scargle_power
from .timeseries import (
    CALVES,
    DAY,
    HOME_SENSORS,
    HOUR,
    MINUTE,
    VLE_LOGS,
    TimeSeries,
    WindowPlan,
    WindowSpec,
    plan_windows,
    validate_series,
)

__version__ = "0.1.0"

__all__ = [
    "accelerometer_pipeline",
    "align_traces",
    "annotate_bands",
    "AnnotationBands",
    "apply_filter",
    "Band",
    "band_energy",
    "bin_events",
    "CALVES",
    "CohortStack",
    "compute_intensity_trace",
    "DAY",
    "design_bandpass",
    "detrend_mean",
    "EventLog",
    "events_to_series",
    "fft_periodogram",
    "FilterDesign",
    "fuse_streams",
    "HOME_SENSORS",
    "HOUR",
    "IntensityTrace",
    "lomb_scargle_power",
    "mean_downsample",
    "MINUTE",
    "normalize_trace",
    "PeriodicityError",
    "plan_windows",
    "rectify_abs",
    "signal_vector_magnitude",
    "Spectrum",
    "StabilityResult",
    "stack",
    "subgroup_stability",
    "TimeSeries",
    "TriaxialSeries",
    "union_range",
    "validate_series",
    "VLE_LOGS",
    "WindowPlan",
    "WindowSpec",
]
