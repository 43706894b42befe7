"""On-disk formats.

Every file is plain CSV with a mandatory header row. Instants are ISO-8601
with an explicit UTC offset (``Z`` on output); floats are written in
shortest round-trip form so reading back reproduces the exact values.
Optional ``# key: value`` lines before the header carry metadata.

=========  ==============================================
events     ``timestamp,stream_id[,weight]`` (header optional)
accel      ``timestamp,x,y,z`` (header optional)
series     ``timestamp_iso8601,value``
trace      ``center_iso8601,intensity,coverage``
matrix     ``center_iso8601,<subject>,<subject>,...``
bands      ``band,start_iso8601,end_iso8601``
stability  ``group,size,correlation,subjects``
=========  ==============================================

Run configuration is a ``key = value`` text file; ``#`` starts a comment
and durations are written ``<number><unit>`` with unit one of s, m, h, d.
"""

from __future__ import annotations

import csv
import logging
import math
import re
from dataclasses import dataclass, field, fields
from datetime import datetime, timedelta, timezone, tzinfo
from pathlib import Path
from typing import Iterator
from zoneinfo import ZoneInfo, ZoneInfoNotFoundError

import numpy as np

from .cohort import AnnotationBands, Band, CohortStack, StabilityResult
from .engine import IntensityTrace
from .errors import EmptyTrace, IoError, MissingColumn, ParseError, TooFewRows
from .preprocess import DEFAULT_BIN_WIDTH, EventLog, TriaxialSeries
from .timeseries import DAY, HOUR, METHODS, MINUTE, TimeSeries, WindowSpec

log = logging.getLogger(__name__)

EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_ONE_SECOND = timedelta(seconds=1)
_FRACTION = re.compile(r"(\d{2}:\d{2}:\d{2})\.(\d+)")
_DURATION = re.compile(r"^\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*([smhd])\s*$")
_UNITS = {"s": 1.0, "m": MINUTE, "h": HOUR, "d": DAY}

MIN_ACCEL_ROWS = 100


# ------------------------------------------------------------ primitives


def parse_instant(text: str, tz: tzinfo | None = None) -> float:
    """Seconds since the epoch for an ISO-8601 instant.

    The text must carry an offset (or ``Z``) unless ``tz`` is given, in which
    case naive times are read as local times in ``tz``.
    """
    s = text.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    # 3.10's fromisoformat only takes 3 or 6 fractional digits
    m = _FRACTION.search(s)
    if m:
        frac = (m.group(2) + "000000")[:6]
        s = s[: m.start()] + f"{m.group(1)}.{frac}" + s[m.end() :]
    try:
        dt = datetime.fromisoformat(s)
    except ValueError as exc:
        raise ParseError(f"invalid ISO-8601 instant {text!r}") from exc
    if dt.tzinfo is None:
        if tz is None:
            raise ParseError(f"instant {text!r} has no UTC offset")
        dt = dt.replace(tzinfo=tz)
    return (dt - EPOCH) / _ONE_SECOND


def format_instant(t: float) -> str:
    us = round(t * 1e6)
    dt = EPOCH + timedelta(microseconds=us)
    if us % 1_000_000 == 0:
        return dt.strftime("%Y-%m-%dT%H:%M:%SZ")
    return dt.strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def format_float(x: float) -> str:
    return repr(float(x))


def parse_duration(text: str) -> float:
    """``"7d"`` -> 604800.0. Units: s, m (minutes), h, d."""
    m = _DURATION.match(str(text))
    if not m:
        raise ValueError(f"invalid duration {text!r}; expected <number><s|m|h|d>")
    return float(m.group(1)) * _UNITS[m.group(2)]


def format_duration(seconds: float) -> str:
    for unit in ("d", "h", "m"):
        n = seconds / _UNITS[unit]
        if n >= 1 and n == int(n):
            return f"{int(n)}{unit}"
    return f"{seconds:g}s"


def get_timezone(name: str | None) -> tzinfo | None:
    if not name:
        return None
    if name.upper() in ("UTC", "Z"):
        return timezone.utc
    try:
        return ZoneInfo(name)
    except (ZoneInfoNotFoundError, ValueError) as exc:
        raise ParseError(f"unknown timezone {name!r}") from exc


def _open_text(path, mode="r"):
    try:
        return open(path, mode, newline="", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"{path}: {exc.strerror or exc}") from exc


def _rows(path) -> Iterator[tuple[int, list[str]]]:
    """Yield ``(line_number, fields)`` for non-blank, non-comment lines."""
    with _open_text(path) as fh:
        try:
            for lineno, line in enumerate(fh, start=1):
                stripped = line.strip()
                if not stripped or stripped.startswith("#"):
                    continue
                yield lineno, next(csv.reader([stripped]))
        except UnicodeDecodeError as exc:
            raise ParseError("file is not UTF-8 text", path=str(path)) from exc
        except csv.Error as exc:
            raise ParseError(f"malformed CSV: {exc}", lineno, str(path)) from exc


def _read_metadata(path) -> dict[str, str]:
    meta = {}
    with _open_text(path) as fh:
        try:
            for line in fh:
                s = line.strip()
                if not s.startswith("#"):
                    if s:
                        break
                    continue
                key, sep, value = s[1:].partition(":")
                if sep:
                    meta[key.strip()] = value.strip()
        except UnicodeDecodeError as exc:
            raise ParseError("file is not UTF-8 text", path=str(path)) from exc
    return meta


def _is_header(fields_: list[str], first: str) -> bool:
    return bool(fields_) and fields_[0].strip().lower() == first


# ---------------------------------------------------------------- events


def read_events(path, tz: tzinfo | None = None, subject_id: str | None = None) -> EventLog:
    """Parse an event log; rows are ``timestamp,stream_id[,weight]``."""
    times, streams, weights = [], [], []
    first_row = True
    for lineno, row in _rows(path):
        if first_row and _is_header(row, "timestamp"):
            first_row = False
            continue
        first_row = False
        if len(row) < 2 or not row[1].strip():
            raise MissingColumn("expected timestamp,stream_id[,weight]", lineno, str(path))
        try:
            t = parse_instant(row[0], tz)
        except ParseError as exc:
            raise ParseError(str(exc), lineno, str(path)) from None
        w = 1.0
        if len(row) > 2 and row[2].strip():
            try:
                w = float(row[2])
            except ValueError:
                raise ParseError(f"invalid weight {row[2]!r}", lineno, str(path)) from None
            if not (math.isfinite(w) and w >= 0):
                raise ParseError(f"weight must be finite and non-negative, got {row[2]!r}", lineno, str(path))
        times.append(t)
        streams.append(row[1].strip())
        weights.append(w)
    sid = Path(path).stem if subject_id is None else subject_id
    return EventLog(np.array(times, dtype=float), tuple(streams), np.array(weights), sid)


# ---------------------------------------------------------- accelerometer


def read_accel(path, tz: tzinfo | None = None) -> TriaxialSeries:
    """Parse an accelerometer export with rows ``timestamp,x,y,z`` (g units)."""
    times, xyz = [], []
    first_row = True
    for lineno, row in _rows(path):
        if first_row and _is_header(row, "timestamp"):
            first_row = False
            continue
        first_row = False
        if len(row) < 4:
            raise MissingColumn("expected timestamp,x,y,z", lineno, str(path))
        try:
            t = parse_instant(row[0], tz)
        except ParseError as exc:
            raise ParseError(str(exc), lineno, str(path)) from None
        try:
            v = (float(row[1]), float(row[2]), float(row[3]))
        except ValueError:
            raise ParseError(f"non-numeric acceleration in {row[1:4]!r}", lineno, str(path)) from None
        if not all(math.isfinite(c) for c in v):
            raise ParseError("non-finite acceleration", lineno, str(path))
        times.append(t)
        xyz.append(v)
    if len(times) < MIN_ACCEL_ROWS:
        raise TooFewRows(f"{path}: {len(times)} rows, need at least {MIN_ACCEL_ROWS}")
    ts = np.array(times)
    arr = np.array(xyz)
    if np.any(np.diff(ts) < 0):
        log.warning("%s: rows out of time order; sorted", path)
        order = np.argsort(ts, kind="stable")
        ts, arr = ts[order], arr[order]
    # gaps in whole microseconds, the resolution of the timestamps; epoch-sized
    # floats would otherwise leave ~1e-6 relative noise in the rate
    gap_us = float(np.median(np.rint(np.diff(ts) * 1e6)))
    if not gap_us > 0:
        raise ParseError("cannot infer sample rate (median gap is not positive)", path=str(path))
    return TriaxialSeries(ts, arr, 1e6 / gap_us)


# ---------------------------------------------------------------- series


def write_series(series: TimeSeries, path) -> None:
    with _open_text(path, "w") as fh:
        if series.unit_label:
            fh.write(f"# unit: {series.unit_label}\n")
        fh.write("timestamp_iso8601,value\n")
        for t, v in zip(series.timestamps, series.values):
            fh.write(f"{format_instant(t)},{format_float(v)}\n")


def read_series(path) -> TimeSeries:
    meta = _read_metadata(path)
    times, values = [], []
    header_seen = False
    for lineno, row in _rows(path):
        if not header_seen:
            if not _is_header(row, "timestamp_iso8601"):
                raise MissingColumn("missing header 'timestamp_iso8601,value'", lineno, str(path))
            header_seen = True
            continue
        if len(row) < 2:
            raise MissingColumn("expected timestamp_iso8601,value", lineno, str(path))
        try:
            times.append(parse_instant(row[0]))
            values.append(float(row[1]))
        except (ParseError, ValueError) as exc:
            raise ParseError(str(exc), lineno, str(path)) from None
    if not header_seen:
        raise MissingColumn("missing header 'timestamp_iso8601,value'", path=str(path))
    return TimeSeries(np.array(times), np.array(values), meta.get("unit", ""))


# ---------------------------------------------------------------- traces

_SPEC_KEYS = ("target_period", "window_length", "stride", "period_tolerance", "method", "min_coverage")


def write_trace(trace: IntensityTrace, path) -> None:
    with _open_text(path, "w") as fh:
        if trace.subject_id:
            fh.write(f"# subject: {trace.subject_id}\n")
        if trace.spec is not None:
            for key in _SPEC_KEYS:
                value = getattr(trace.spec, key)
                fh.write(f"# {key}: {value if isinstance(value, str) else format_float(value)}\n")
        fh.write(f"# normalized: {'true' if trace.normalized else 'false'}\n")
        fh.write("center_iso8601,intensity,coverage\n")
        for c, y, cov in zip(trace.centers, trace.intensities, trace.coverage):
            fh.write(f"{format_instant(c)},{format_float(y)},{format_float(cov)}\n")


def _spec_from_meta(meta: dict[str, str]) -> WindowSpec | None:
    if not all(k in meta for k in _SPEC_KEYS):
        return None
    kwargs = {k: (meta[k] if k == "method" else float(meta[k])) for k in _SPEC_KEYS}
    return WindowSpec(**kwargs)


def read_trace(path) -> IntensityTrace:
    """Read a trace file; a header-only file raises :class:`EmptyTrace`."""
    meta = _read_metadata(path)
    centers, ys, covs = [], [], []
    header_seen = False
    for lineno, row in _rows(path):
        if not header_seen:
            if not _is_header(row, "center_iso8601"):
                raise MissingColumn("missing header 'center_iso8601,intensity,coverage'", lineno, str(path))
            header_seen = True
            continue
        if len(row) < 3:
            raise MissingColumn("expected center_iso8601,intensity,coverage", lineno, str(path))
        try:
            centers.append(parse_instant(row[0]))
            ys.append(float(row[1]))
            covs.append(float(row[2]))
        except (ParseError, ValueError) as exc:
            raise ParseError(str(exc), lineno, str(path)) from None
    if not header_seen:
        raise MissingColumn("missing header 'center_iso8601,intensity,coverage'", path=str(path))
    if not centers:
        raise EmptyTrace(f"{path}: trace has no rows")
    try:
        spec = _spec_from_meta(meta)
    except ValueError as exc:
        raise ParseError(f"invalid window metadata: {exc}", path=str(path)) from None
    return IntensityTrace(
        np.array(centers),
        np.array(ys),
        np.array(covs),
        spec,
        meta.get("subject", Path(path).stem),
        meta.get("normalized", "false").lower() == "true",
    )


# ----------------------------------------------------------------- stacks


def write_stack(stack: CohortStack, path) -> None:
    with _open_text(path, "w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["center_iso8601", *stack.subjects])
        for j, c in enumerate(stack.grid):
            w.writerow([format_instant(c), *(format_float(v) for v in stack.normalized[:, j])])


def read_stack(path) -> CohortStack:
    subjects: list[str] | None = None
    grid, rows = [], []
    for lineno, row in _rows(path):
        if subjects is None:
            if not _is_header(row, "center_iso8601"):
                raise MissingColumn("missing header 'center_iso8601,<subjects...>'", lineno, str(path))
            subjects = row[1:]
            continue
        if len(row) != len(subjects) + 1:
            raise MissingColumn(f"expected {len(subjects) + 1} columns, got {len(row)}", lineno, str(path))
        try:
            grid.append(parse_instant(row[0]))
            rows.append([float(v) for v in row[1:]])
        except (ParseError, ValueError) as exc:
            raise ParseError(str(exc), lineno, str(path)) from None
    if subjects is None:
        raise MissingColumn("missing header 'center_iso8601,<subjects...>'", path=str(path))
    if not grid:
        raise EmptyTrace(f"{path}: stack has no rows")
    matrix = np.array(rows, dtype=float).T.reshape(len(subjects), len(grid))
    return CohortStack(tuple(subjects), np.array(grid), matrix)


def write_top_line(stack: CohortStack, path) -> None:
    write_series(TimeSeries(stack.grid, stack.top_line, "stacked normalized intensity"), path)


# ------------------------------------------------------------------ bands


def write_bands(bands: AnnotationBands, path) -> None:
    with _open_text(path, "w") as fh:
        fh.write(f"# band_width: {format_float(bands.band_width)}\n")
        fh.write("band,start_iso8601,end_iso8601\n")
        for label, band in bands.rows():
            fh.write(f"{label},{format_instant(band.start)},{format_instant(band.end)}\n")


def read_bands(path) -> list[tuple[str, Band]]:
    out = []
    header_seen = False
    for lineno, row in _rows(path):
        if not header_seen:
            if not _is_header(row, "band"):
                raise MissingColumn("missing header 'band,start_iso8601,end_iso8601'", lineno, str(path))
            header_seen = True
            continue
        if len(row) < 3:
            raise MissingColumn("expected band,start_iso8601,end_iso8601", lineno, str(path))
        try:
            out.append((row[0].strip(), Band(parse_instant(row[1]), parse_instant(row[2]))))
        except ParseError as exc:
            raise ParseError(str(exc), lineno, str(path)) from None
    if not header_seen:
        raise MissingColumn("missing header 'band,start_iso8601,end_iso8601'", path=str(path))
    return out


# -------------------------------------------------------------- stability


def write_stability(result: StabilityResult, path) -> None:
    with _open_text(path, "w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group", "size", "correlation", "subjects"])
        for i, (members, r) in enumerate(zip(result.groups, result.correlations)):
            w.writerow([i, len(members), format_float(r), ";".join(members)])


# ---------------------------------------------------------------- config


@dataclass
class RunConfig:
    target_period: float = 24 * HOUR
    window_length: float = 7 * DAY
    stride: float = HOUR
    period_tolerance: float = 0.01 * HOUR
    method: str = "auto"
    min_coverage: float = 0.1
    bin_width: float = DEFAULT_BIN_WIDTH
    bucket: float = 60.0
    filter_order: int = 4
    filter_low: float = 0.5
    filter_high: float = 20.0
    subjects: list[str] = field(default_factory=list)
    inputs: list[Path] = field(default_factory=list)
    timezone: str = ""

    def window_spec(self, method: str | None = None) -> WindowSpec:
        m = method or self.method
        if m == "auto":
            m = "fft"
        return WindowSpec(
            self.target_period,
            self.window_length,
            self.stride,
            self.period_tolerance,
            m,
            self.min_coverage,
        )


_DURATION_KEYS = {"target_period", "window_length", "stride", "period_tolerance", "bin_width", "bucket"}
_FLOAT_KEYS = {"min_coverage", "filter_low", "filter_high"}


def load_config(path) -> RunConfig:
    """Read a ``key = value`` run configuration; relative inputs resolve against its directory."""
    base = Path(path).resolve().parent
    known = {f.name for f in fields(RunConfig)}
    values: dict = {}
    try:
        with _open_text(path) as fh:
            lines = fh.read().splitlines()
    except UnicodeDecodeError as exc:
        raise ParseError("file is not UTF-8 text", path=str(path)) from exc
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        key, sep, value = text.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ParseError("expected 'key = value'", lineno, str(path))
        if key not in known:
            raise ParseError(f"unknown key {key!r}", lineno, str(path))
        try:
            if key in _DURATION_KEYS:
                values[key] = parse_duration(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            elif key == "filter_order":
                values[key] = int(value)
            elif key == "method":
                if value not in (*METHODS, "auto"):
                    raise ValueError(f"method must be auto, fft or lomb-scargle, got {value!r}")
                values[key] = value
            elif key == "subjects":
                values[key] = [s.strip() for s in value.split(",") if s.strip()]
            elif key == "inputs":
                values[key] = [base / s.strip() for s in value.split(",") if s.strip()]
            else:
                values[key] = value
        except ValueError as exc:
            raise ParseError(str(exc), lineno, str(path)) from None
    cfg = RunConfig(**values)
    get_timezone(cfg.timezone)
    for p in cfg.inputs:
        if not p.exists():
            raise IoError(f"{path}: input {p} does not exist")
    try:
        cfg.window_spec()
    except ValueError as exc:
        raise ParseError(f"inconsistent window settings: {exc}", path=str(path)) from None
    return cfg
