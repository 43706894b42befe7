import logging
from datetime import timedelta, timezone

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from periodicity.cohort import align_traces, annotate_bands, union_range
from periodicity.engine import IntensityTrace, compute_intensity_trace
from periodicity.errors import (
    EmptyTrace,
    IoError,
    MissingColumn,
    ParseError,
    PeriodicityError,
    TooFewRows,
)
from periodicity.formats import (
    format_duration,
    format_instant,
    get_timezone,
    load_config,
    parse_duration,
    parse_instant,
    read_accel,
    read_bands,
    read_events,
    read_series,
    read_stack,
    read_trace,
    write_bands,
    write_series,
    write_stack,
    write_trace,
)
from periodicity.timeseries import DAY, HOUR, MINUTE, TimeSeries, WindowSpec

T0 = 1_646_211_600.0  # 2022-03-02T09:00:00Z


def write(tmp_path, text, name="f.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


# ---------------------------------------------------------------- instants


def test_parse_instant_offsets():
    assert parse_instant("2022-03-02T09:00:00Z") == T0
    assert parse_instant("2022-03-02T10:00:00+01:00") == T0
    assert parse_instant("2022-03-02T09:00:00.25Z") == T0 + 0.25
    assert parse_instant("2022-03-02T09:00:00.1234567Z") == pytest.approx(T0 + 0.123456, abs=1e-6)


def test_parse_instant_requires_offset():
    with pytest.raises(ParseError):
        parse_instant("2022-03-02T09:00:00")
    assert parse_instant("2022-03-02T09:00:00", timezone(timedelta(hours=-5))) == T0 + 5 * HOUR


def test_parse_instant_local_zone_across_dst():
    london = get_timezone("Europe/London")
    # clocks went forward on 2022-03-27: 09:00 local is 09:00Z before, 08:00Z after
    before = parse_instant("2022-03-26T09:00:00", london)
    after = parse_instant("2022-03-28T09:00:00", london)
    assert after - before == 2 * DAY - HOUR


def test_format_instant():
    assert format_instant(T0) == "2022-03-02T09:00:00Z"
    assert format_instant(T0 + 0.5) == "2022-03-02T09:00:00.500000Z"
    for t in (T0, T0 + 0.5, T0 + 1234.000001, 0.0):
        assert parse_instant(format_instant(t)) == t


def test_durations():
    assert parse_duration("7d") == 7 * DAY
    assert parse_duration("0.01h") == pytest.approx(36.0)
    assert parse_duration("15m") == 15 * MINUTE
    assert parse_duration("60s") == 60
    for bad in ("7", "7w", "", "d", "-1h"):
        with pytest.raises(ValueError):
            parse_duration(bad)
    assert [format_duration(x) for x in (7 * DAY, HOUR, 15 * MINUTE, 36.0)] == ["7d", "1h", "15m", "36s"]


def test_unknown_timezone():
    with pytest.raises(ParseError):
        get_timezone("Mars/Olympus")


# ------------------------------------------------------------------ events


def test_read_events_examples(tmp_path):
    p = write(tmp_path, "2022-03-02T09:00:00Z,fridge\n2022-03-02T10:00:00+01:00,kettle,2\n")
    log_ = read_events(p)
    assert log_.timestamps.tolist() == [T0, T0]
    assert log_.weights.tolist() == [1.0, 2.0]
    assert log_.stream_ids == ("fridge", "kettle")
    assert log_.subject_id == "f"


def test_read_events_sorted_with_header(tmp_path):
    p = write(tmp_path, "timestamp,stream_id,weight\n# note\n2022-03-02T11:00:00Z,a\n\n2022-03-02T09:00:00Z,b\n")
    log_ = read_events(p)
    assert log_.timestamps.tolist() == [T0, T0 + 2 * HOUR]
    assert log_.stream_ids == ("b", "a")


@pytest.mark.parametrize(
    "row,err",
    [
        ("yesterday,fridge", ParseError),
        ("2022-03-02T09:00:00,fridge", ParseError),
        ("2022-03-02T09:00:00Z", MissingColumn),
        ("2022-03-02T09:00:00Z,fridge,heavy", ParseError),
        ("2022-03-02T09:00:00Z,fridge,-1", ParseError),
    ],
)
def test_read_events_errors_name_the_line(tmp_path, row, err):
    p = write(tmp_path, f"2022-03-02T08:00:00Z,door\n{row}\n")
    with pytest.raises(err) as info:
        read_events(p)
    assert info.value.line == 2
    assert str(info.value).startswith(f"{p}:2: ")


def test_missing_file_is_io_error(tmp_path):
    with pytest.raises(IoError):
        read_events(tmp_path / "nope.csv")


# ------------------------------------------------------------------- accel


def accel_text(n, rate=12.5, shuffle=False):
    rows = [f"{format_instant(T0 + i / rate)},{0.01 * i},0,1" for i in range(n)]
    if shuffle:
        rows[10], rows[11] = rows[11], rows[10]
    return "timestamp,x,y,z\n" + "\n".join(rows) + "\n"


def test_read_accel_rate(tmp_path):
    raw = read_accel(write(tmp_path, accel_text(1250)))
    assert raw.nominal_rate == pytest.approx(12.5, rel=1e-9)
    assert raw.xyz.shape == (1250, 3)
    assert raw.timestamps[-1] - raw.timestamps[0] == pytest.approx(99.92)


def test_read_accel_sorts_with_warning(tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        raw = read_accel(write(tmp_path, accel_text(200, shuffle=True)))
    assert np.all(np.diff(raw.timestamps) > 0)
    assert raw.xyz[10, 0] == pytest.approx(0.10)
    assert "sorted" in caplog.text


def test_read_accel_errors(tmp_path):
    bad = accel_text(200).replace(",0.05,0,1", ",abc,0,1")
    with pytest.raises(ParseError):
        read_accel(write(tmp_path, bad))
    with pytest.raises(TooFewRows):
        read_accel(write(tmp_path, accel_text(99)))


# ------------------------------------------------------ series and traces


def test_series_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    s = TimeSeries(T0 + np.arange(50) * 900.0, rng.standard_normal(50), "events/bin")
    write_series(s, tmp_path / "s.csv")
    back = read_series(tmp_path / "s.csv")
    assert back == s and back.unit_label == "events/bin"


def test_trace_round_trip_1993_points(tmp_path):
    rng = np.random.default_rng(1)
    t = np.arange(0, 90 * DAY + 1, HOUR)
    x = np.sin(2 * np.pi * t / DAY) + rng.standard_normal(t.size)
    trace = compute_intensity_trace(TimeSeries(T0 + t, x), WindowSpec(), subject_id="s01")
    assert len(trace) == 1993
    write_trace(trace, tmp_path / "t.csv")
    back = read_trace(tmp_path / "t.csv")
    assert back.centers.tobytes() == trace.centers.tobytes()
    assert back.intensities.tobytes() == trace.intensities.tobytes()
    assert back.coverage.tobytes() == trace.coverage.tobytes()
    assert back.spec == trace.spec and back.subject_id == "s01" and not back.normalized


def test_trace_coverage_precision(tmp_path):
    cov = np.array([0.1234567, 1 / 3, 1.0])
    trace = IntensityTrace(T0 + np.arange(3) * HOUR, np.ones(3), cov)
    write_trace(trace, tmp_path / "t.csv")
    text = (tmp_path / "t.csv").read_text()
    assert "0.1234567" in text
    assert read_trace(tmp_path / "t.csv").coverage.tolist() == cov.tolist()


def test_empty_trace_is_header_only(tmp_path):
    empty = IntensityTrace([], [], [])
    write_trace(empty, tmp_path / "e.csv")
    lines = [ln for ln in (tmp_path / "e.csv").read_text().splitlines() if not ln.startswith("#")]
    assert lines == ["center_iso8601,intensity,coverage"]
    with pytest.raises(EmptyTrace):
        read_trace(tmp_path / "e.csv")


def test_trace_without_header_rejected(tmp_path):
    with pytest.raises(MissingColumn):
        read_trace(write(tmp_path, "2022-03-02T09:00:00Z,1,1\n"))


def _traces():
    rng = np.random.default_rng(2)
    spec = WindowSpec(stride=6 * HOUR)
    return [
        IntensityTrace(T0 + 3.5 * DAY + np.arange(20) * 6 * HOUR, rng.uniform(size=20), np.ones(20), spec, f"s{i}")
        for i in range(3)
    ]


def test_stack_round_trip(tmp_path):
    traces = _traces()
    s = align_traces(traces, *union_range(traces))
    write_stack(s, tmp_path / "m.csv")
    back = read_stack(tmp_path / "m.csv")
    assert back.subjects == s.subjects
    assert np.array_equal(back.grid, s.grid) and np.array_equal(back.normalized, s.normalized)


def test_bands_round_trip(tmp_path):
    bands = annotate_bands(_traces()[0], DAY)
    write_bands(bands, tmp_path / "b.csv")
    assert read_bands(tmp_path / "b.csv") == bands.rows()


# ------------------------------------------------------------------ config


def test_load_config(tmp_path):
    (tmp_path / "a.csv").write_text("")
    cfg = write(
        tmp_path,
        "# calves\ntarget_period = 24h\nwindow_length = 7d  # m\nstride = 15m\n"
        "method = lomb-scargle\nsubjects = c1, c2\ninputs = a.csv\ntimezone = Europe/London\n",
        "run.cfg",
    )
    c = load_config(cfg)
    assert c.stride == 15 * MINUTE and c.method == "lomb-scargle"
    assert c.subjects == ["c1", "c2"] and c.inputs == [tmp_path / "a.csv"]
    assert c.window_spec().stride == 15 * MINUTE


@pytest.mark.parametrize(
    "text,err",
    [
        ("colour = red\n", ParseError),
        ("stride = 1 hour\n", ParseError),
        ("just text\n", ParseError),
        ("stride = 8d\n", ParseError),
        ("method = wavelet\n", ParseError),
        ("inputs = missing.csv\n", IoError),
        ("timezone = Nowhere/Land\n", ParseError),
    ],
)
def test_load_config_errors(tmp_path, text, err):
    with pytest.raises(err):
        load_config(write(tmp_path, text, "run.cfg"))


# --------------------------------------------------------------- totality

READERS = [read_events, read_accel, read_series, read_trace, read_stack, read_bands, load_config]

line = st.one_of(
    st.text(max_size=40),
    st.sampled_from(
        [
            "timestamp,stream_id",
            "center_iso8601,intensity,coverage",
            "timestamp_iso8601,value",
            "band,start_iso8601,end_iso8601",
            "2022-03-02T09:00:00Z,1,0.5",
            "2022-03-02T09:00:00Z,fridge,2",
            "2022-03-02T09:00:00Z,1,2,3",
            "# stride: abc",
            "# target_period: 1e400",
            "\"unterminated,quote",
            "stride = 1h",
            "9999-12-31T23:59:59Z,1,1",
            "\x00",
        ]
    ),
)


@settings(max_examples=300, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.lists(line, max_size=12), st.binary(max_size=8), st.sampled_from(READERS))
def test_parsers_are_total(tmp_path, lines, junk, reader):
    p = tmp_path / "fuzz.csv"
    p.write_bytes("\n".join(lines).encode("utf-8", "surrogatepass") + junk)
    try:
        reader(p)
    except PeriodicityError:
        pass
