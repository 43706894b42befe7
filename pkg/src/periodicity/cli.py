"""Command line interface.

Subcommands mirror the pipeline::

    periodicity ingest     raw events / accelerometer CSV -> series file
    periodicity intensity  series file -> trace file
    periodicity stack      trace files -> aligned matrix + top line
    periodicity annotate   trace file -> red/green/yellow bands
    periodicity stability  trace files -> per-group correlations
    periodicity render     trace or matrix file -> SVG

Data goes to files only; diagnostics go to stderr. Exit status is 0 on
success, 2 for bad flags and 3 for bad data. Failures also print one JSON
line ``{"error": <code>, "message": <text>}`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .cohort import align_traces, annotate_bands, subgroup_stability, union_range
from .engine import compute_intensity_trace, normalize_trace
from .errors import InvalidSpec, PeriodicityError
from .formats import (
    format_duration,
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
    write_stability,
    write_stack,
    write_top_line,
    write_trace,
)
from .preprocess import accelerometer_pipeline, events_to_series
from .render import render_line, render_stacked
from .timeseries import PRESETS, WindowSpec, is_evenly_sampled, validate_series

log = logging.getLogger("periodicity")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3


class UsageError(Exception):
    pass


def _note(message: str) -> None:
    print(message, file=sys.stderr)


def _emit_error(code: str, message: str) -> None:
    print(json.dumps({"error": code, "message": message}), file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _emit_error("usage", message)
        raise SystemExit(EXIT_USAGE)


def _duration(text: str) -> float:
    try:
        return parse_duration(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _instant(text: str) -> float:
    try:
        return parse_instant(text)
    except PeriodicityError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


PRESET_HELP = (
    "use-case presets (period, window, stride): "
    "home = 24h, 7d, 1h (in-home sensors); "
    "vle = 24h, 7d, 3h (VLE access logs); "
    "calves = 24h, 7d, 15m (calf accelerometers)"
)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="periodicity", description="Periodicity intensity of longitudinal time series.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", type=Path, help="key = value run configuration supplying defaults")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more log output on stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ingest", help="raw events or accelerometer CSV -> series file")
    s.add_argument("--kind", choices=("events", "accel"), required=True)
    s.add_argument("--input", nargs="+", type=Path, required=True, help="one or more input files")
    s.add_argument("--bin", dest="bin_width", type=_duration, default=parse_duration("15m"),
                   help="event bin width (default: 15m)")
    s.add_argument("--start", type=_instant,
                   help="first bin start, ISO-8601 (default: UTC midnight before the first event)")
    s.add_argument("--end", type=_instant, help="bin range end, ISO-8601 (default: after last event)")
    s.add_argument("--bucket", type=_duration, default=parse_duration("60s"),
                   help="accelerometer averaging bucket (default: 60s)")
    s.add_argument("--low", dest="filter_low", type=float, default=0.5,
                   help="band-pass low cutoff in Hz (default: 0.5)")
    s.add_argument("--high", dest="filter_high", type=float, default=20.0,
                   help="band-pass high cutoff in Hz, clamped to 0.45 x sample rate (default: 20)")
    s.add_argument("--order", dest="filter_order", type=int, default=4,
                   help="Butterworth prototype order (default: 4)")
    s.add_argument("--tz", dest="timezone", default="",
                   help="timezone for timestamps without offset, e.g. Europe/Dublin (default: reject them)")
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser(
        "intensity",
        help="series file -> periodicity intensity trace",
        description="Sliding-window periodicity intensity. " + PRESET_HELP + ".",
    )
    s.add_argument("--preset", choices=sorted(PRESETS), help=PRESET_HELP)
    s.add_argument("--period", dest="target_period", type=_duration, default=parse_duration("24h"),
                   help="target period, 24h circadian or 168h weekly (default: 24h)")
    s.add_argument("--window", dest="window_length", type=_duration, default=parse_duration("7d"),
                   help="window length (default: 7d)")
    s.add_argument("--stride", type=_duration, default=parse_duration("1h"),
                   help="shift between windows (default: 1h)")
    s.add_argument("--tolerance", dest="period_tolerance", type=_duration, default=parse_duration("0.01h"),
                   help="neighbouring periods within this of the target count (default: 0.01h)")
    s.add_argument("--method", choices=("auto", "fft", "lomb-scargle"), default="auto",
                   help="estimator; auto picks fft for evenly sampled series (default: auto)")
    s.add_argument("--min-coverage", dest="min_coverage", type=float, default=0.1,
                   help="windows with less than this fraction of expected samples emit 0 (default: 0.1)")
    s.add_argument("--normalize", action="store_true", help="min-max scale the trace to [0, 1]")
    s.add_argument("--subject", help="subject id (default: input file stem)")
    s.add_argument("--in", dest="input", type=Path, required=True)
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_intensity)

    s = sub.add_parser("stack", help="align and stack traces on a shared grid")
    s.add_argument("--in", dest="inputs", nargs="+", type=Path, required=True)
    s.add_argument("--start", type=_instant, help="fixed start, ISO-8601 (default: earliest trace)")
    s.add_argument("--end", type=_instant, help="fixed end, ISO-8601 (default: latest trace)")
    s.add_argument("--window", dest="window_length", type=_duration,
                   help="window length used by the traces (default: from trace metadata, else 7d)")
    s.add_argument("--out", type=Path, required=True, help="aligned matrix file")
    s.add_argument("--top-out", type=Path, help="top line series file (default: <out>.top.csv)")
    s.set_defaults(func=cmd_stack)

    s = sub.add_parser("annotate", help="lowest (red), highest (green), steepest (yellow) bands")
    s.add_argument("--in", dest="input", type=Path, required=True)
    s.add_argument("--band", dest="band_width", type=_duration, default=parse_duration("7d"),
                   help="band width (default: 7d)")
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_annotate)

    s = sub.add_parser("stability", help="random sub-group top lines vs the whole cohort")
    s.add_argument("--in", dest="inputs", nargs="+", type=Path, required=True)
    s.add_argument("--groups", type=int, default=4, help="number of groups (default: 4)")
    s.add_argument("--rng-seed", dest="seed", type=int, default=0, help="partition seed (default: 0)")
    s.add_argument("--start", type=_instant)
    s.add_argument("--end", type=_instant)
    s.add_argument("--window", dest="window_length", type=_duration)
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_stability)

    s = sub.add_parser("render", help="static SVG of a trace or a stack")
    s.add_argument("--kind", choices=("line", "stacked"), required=True)
    s.add_argument("--in", dest="input", type=Path, required=True,
                   help="trace file (line) or matrix file (stacked)")
    s.add_argument("--bands", type=Path, help="bands file from 'annotate' (line only)")
    s.add_argument("--title")
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_render)
    return p


# ---------------------------------------------------------------- commands


def cmd_ingest(args) -> int:
    tz = get_timezone(args.timezone)
    if args.kind == "events":
        logs = [read_events(path, tz) for path in args.input]
        n_events = sum(len(lg) for lg in logs)
        series = events_to_series(logs, args.bin_width, args.start, args.end)
        _note(f"read {n_events} events from {len(logs)} file(s); "
              f"wrote {len(series)} bins of {format_duration(args.bin_width)}")
    else:
        if len(args.input) != 1:
            raise UsageError("accel ingest takes exactly one --input file")
        raw = read_accel(args.input[0], tz)
        series, design = accelerometer_pipeline(
            raw, args.filter_low, args.filter_high, args.filter_order, args.bucket
        )
        for note in design.warnings:
            print(f"warning: {note}", file=sys.stderr)
        _note(f"read {len(raw)} samples at {raw.nominal_rate:.4g} Hz; "
              f"wrote {len(series)} buckets of {format_duration(args.bucket)}")
    write_series(series, args.out)
    return EXIT_OK


def _spec_from_args(args, method: str) -> WindowSpec:
    try:
        return WindowSpec(
            args.target_period,
            args.window_length,
            args.stride,
            args.period_tolerance,
            method,
            args.min_coverage,
        )
    except InvalidSpec as exc:
        raise UsageError(str(exc)) from None


def cmd_intensity(args) -> int:
    if args.preset:
        preset = PRESETS[args.preset]
        args.target_period = preset.target_period
        args.window_length = preset.window_length
        args.stride = preset.stride
    # validate flags before touching data so flag errors exit 2
    _spec_from_args(args, "fft")
    series = validate_series(read_series(args.input))
    method = args.method
    if method == "auto":
        method = "fft" if is_evenly_sampled(series.timestamps) else "lomb-scargle"
    spec = _spec_from_args(args, method)
    subject = args.subject or args.input.stem
    trace = compute_intensity_trace(series, spec, subject)
    if args.normalize:
        trace = normalize_trace(trace)
    write_trace(trace, args.out)
    _note(f"{subject}: {len(trace)} windows ({method}, window {format_duration(spec.window_length)}, "
          f"stride {format_duration(spec.stride)})")
    return EXIT_OK


def _aligned(args):
    traces = [read_trace(p) for p in args.inputs]
    lo, hi = union_range(traces, args.window_length)
    start = args.start if args.start is not None else lo
    end = args.end if args.end is not None else hi
    return align_traces(traces, start, end, args.window_length)


def cmd_stack(args) -> int:
    stacked = _aligned(args)
    top_out = args.top_out or args.out.with_suffix(".top.csv")
    write_stack(stacked, args.out)
    write_top_line(stacked, top_out)
    _note(f"stacked {len(stacked.subjects)} subjects over {stacked.grid.size} grid points")
    return EXIT_OK


def cmd_annotate(args) -> int:
    trace = normalize_trace(read_trace(args.input))
    write_bands(annotate_bands(trace, args.band_width), args.out)
    return EXIT_OK


def cmd_stability(args) -> int:
    result = subgroup_stability(_aligned(args), args.groups, args.seed)
    write_stability(result, args.out)
    for i, r in enumerate(result.correlations):
        _note(f"group {i}: r = {r:.4f}")
    return EXIT_OK


def cmd_render(args) -> int:
    if args.kind == "line":
        trace = read_trace(args.input)
        if not trace.normalized:
            trace = normalize_trace(trace)
        bands = read_bands(args.bands) if args.bands else ()
        svg = render_line(trace, bands, args.title)
    else:
        if args.bands:
            raise UsageError("--bands applies to --kind line only")
        stacked = read_stack(args.input)
        svg = render_stacked(stacked, args.title or "stacked periodicity intensity")
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    return EXIT_OK


# ------------------------------------------------------------------ driver


_CONFIG_KEYS = {
    "ingest": ("bin_width", "bucket", "filter_low", "filter_high", "filter_order", "timezone"),
    "intensity": ("target_period", "window_length", "stride", "period_tolerance", "method", "min_coverage"),
}


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Use a --config file's values as subcommand defaults; explicit flags still win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, _ = pre.parse_known_args(argv)
    if known.config is None:
        return
    cfg = load_config(known.config)
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for name, keys in _CONFIG_KEYS.items():
        subparsers.choices[name].set_defaults(**{k: getattr(cfg, k) for k in keys})


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
    except PeriodicityError as exc:
        _emit_error(exc.code, str(exc))
        return EXIT_DATA
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        return args.func(args)
    except UsageError as exc:
        _emit_error("usage", str(exc))
        return EXIT_USAGE
    except PeriodicityError as exc:
        _emit_error(exc.code, str(exc))
        return EXIT_DATA
    except OSError as exc:
        _emit_error("IoError", f"{exc.filename or ''}: {exc.strerror or exc}")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
