"""Regenerate the bundled fixture files.

    python3 tests/fixtures/make_fixtures.py

Output is fully determined by the seeds below, so rerunning reproduces the
committed files byte for byte.
"""

from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent
START = datetime(2022, 1, 10, tzinfo=timezone.utc)
DAYS = 42

# (hour of day, spread in hours, streams fired)
ROUTINE = [
    (7.0, 0.5, ("motion", "kettle", "fridge")),
    (12.5, 0.75, ("fridge",)),
    (18.5, 0.75, ("fridge", "kettle", "door")),
    (22.5, 0.5, ("motion", "door")),
]


def iso(t: datetime, offset_hours: int = 0) -> str:
    if offset_hours == 0:
        return t.strftime("%Y-%m-%dT%H:%M:%SZ")
    tz = timezone(timedelta(hours=offset_hours))
    return t.astimezone(tz).isoformat(timespec="seconds")


def home_events(seed: int, absent: tuple[int, int] | None = None) -> list[tuple[datetime, str]]:
    rng = np.random.default_rng(seed)
    events = []
    for day in range(DAYS):
        if absent and absent[0] <= day < absent[1]:
            continue
        base = START + timedelta(days=day)
        for hour, spread, streams in ROUTINE:
            centre = hour + rng.normal(0, spread)
            for k, stream in enumerate(streams):
                offset = centre + k * rng.uniform(0.02, 0.2)
                events.append((base + timedelta(seconds=round(offset * 3600)), stream))
        # background activity scattered through the waking day
        for _ in range(rng.poisson(6)):
            hour = rng.uniform(7, 23)
            stream = ("motion", "fridge", "door")[rng.integers(3)]
            events.append((base + timedelta(seconds=round(hour * 3600)), stream))
    events.sort()
    return events


def write_events(path: Path, events, header: bool, offset_hours: int = 0) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write("timestamp,stream_id\n")
        for t, stream in events:
            fh.write(f"{iso(t, offset_hours)},{stream}\n")


def write_accel(path: Path, seed: int, minutes: float = 3.0, rate: float = 12.5) -> None:
    rng = np.random.default_rng(seed)
    n = int(minutes * 60 * rate)
    t = np.arange(n) / rate
    # short walking bouts on top of a resting posture tilted off vertical
    bouts = (np.sin(2 * np.pi * t / 50) > 0.3).astype(float)
    gait = 0.25 * np.sin(2 * np.pi * 1.6 * t) * bouts
    x = 0.2 + gait + 0.02 * rng.standard_normal(n)
    y = 0.1 + 0.5 * gait + 0.02 * rng.standard_normal(n)
    z = 0.97 + 0.3 * gait + 0.02 * rng.standard_normal(n)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("timestamp,x,y,z\n")
        for i in range(n):
            stamp = START + timedelta(microseconds=round(t[i] * 1e6))
            fh.write(f"{stamp.strftime('%Y-%m-%dT%H:%M:%S.%f')}Z,{x[i]:.4f},{y[i]:.4f},{z[i]:.4f}\n")


def main() -> None:
    write_events(HERE / "home_a.csv", home_events(1), header=True)
    write_events(HERE / "home_b.csv", home_events(2), header=True, offset_hours=1)
    write_events(HERE / "home_c.csv", home_events(3), header=False)
    write_events(HERE / "home_d.csv", home_events(4, absent=(16, 26)), header=True)
    write_accel(HERE / "calf_accel.csv", seed=5)


if __name__ == "__main__":
    main()
