"""Trip-log ingestion and synthetic driver log generation.

Vehicle halts are inferred from silences in the on-board message stream:
while the engine runs messages arrive continuously, so a gap longer than a
threshold marks a stop. Daily traveled distance is integrated from speed
samples rather than GPS displacement, so it keeps working through GPS
outages.
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone

from . import errors
from .geo import haversine_m, valid_coords

WEEKDAYS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")

TRIP_LOG_HEADER = ["timestamp", "speed_kmh", "lat", "lon", "fuel_l", "can_msg"]

DEFAULT_GAP_THRESHOLD_S = 120.0
DEFAULT_DROPOUT_CUTOFF_S = 60.0


def ts_to_date(ts: float) -> date:
    return datetime.fromtimestamp(ts, tz=timezone.utc).date()


@dataclass(frozen=True)
class CanTrace:
    """Timestamps (UTC seconds) at which a bus message was observed."""

    message_times: list[float]

    def __post_init__(self):
        times = self.message_times
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("message times must be non-decreasing")


@dataclass(frozen=True)
class TripSample:
    timestamp: float
    speed_kmh: float
    lat: float | None = None
    lon: float | None = None
    fuel_l: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.speed_kmh) or self.speed_kmh < 0:
            raise ValueError(f"invalid speed {self.speed_kmh}")
        if (self.lat is None) != (self.lon is None):
            raise ValueError("lat and lon must be given together")
        if self.lat is not None and not valid_coords(self.lat, self.lon):
            raise ValueError(f"invalid coordinates ({self.lat}, {self.lon})")
        if self.fuel_l is not None and self.fuel_l < 0:
            raise ValueError(f"invalid fuel level {self.fuel_l}")


@dataclass(frozen=True)
class StopEvent:
    timestamp: float
    day: date
    lat: float
    lon: float


@dataclass(frozen=True)
class DriverProfile:
    """Synthetic driver: anchors, a per-weekday visit schedule and noise knobs.

    The seed fully determines the generated log. `schedule` maps weekday
    names to the ordered anchor visits of that day (the first entry is where
    the day starts). `errand_rate` is the expected number of extra round
    trips per week, each one to a random member of `errand_targets`.
    """

    seed: int
    anchors: dict[str, tuple[float, float]]
    schedule: dict[str, list[str]]
    errand_targets: list[str] = field(default_factory=list)
    errand_rate: float = 0.0
    speed_noise_pct: float = 5.0
    gps_noise_m: float = 10.0
    cruise_speed_kmh: float = 50.0


def detect_halts(trace: CanTrace, gps: list[TripSample],
                 gap_threshold: float = DEFAULT_GAP_THRESHOLD_S) -> list[StopEvent]:
    """Find vehicle stops as message gaps longer than `gap_threshold` seconds.

    Each qualifying gap yields one StopEvent at the gap's start, located at
    the GPS fix nearest in time to it. Raises NoLocationFix if no fix lies
    within `gap_threshold` of a gap start.
    """
    if gap_threshold <= 0:
        raise ValueError("gap_threshold must be positive")
    if not trace.message_times:
        raise errors.EmptyTrace("trace has no messages")
    fixes = [s for s in gps if s.lat is not None]
    events: list[StopEvent] = []
    for t0, t1 in zip(trace.message_times, trace.message_times[1:]):
        if t1 - t0 <= gap_threshold:
            continue
        if not fixes:
            raise errors.NoLocationFix(f"no GPS fix near gap at t={t0}")
        nearest = min(fixes, key=lambda s: (abs(s.timestamp - t0), s.timestamp))
        if abs(nearest.timestamp - t0) > gap_threshold:
            raise errors.NoLocationFix(f"no GPS fix within {gap_threshold}s of gap at t={t0}")
        events.append(StopEvent(timestamp=t0, day=ts_to_date(t0),
                                lat=nearest.lat, lon=nearest.lon))
    return events


def integrate_daily_distance(samples: list[TripSample],
                             gap_cutoff_s: float = DEFAULT_DROPOUT_CUTOFF_S) -> dict[date, float]:
    """Per-calendar-day traveled km as the sum of speed_i * dt_i over sample pairs.

    Pairs spanning more than `gap_cutoff_s` contribute nothing: a stale speed
    must not be multiplied across a sensor dropout. Each pair is attributed
    to the day of its earlier sample.
    """
    totals: dict[date, float] = {}
    for a, b in zip(samples, samples[1:]):
        dt = b.timestamp - a.timestamp
        if dt < 0:
            raise errors.NegativeInterval(f"timestamps decrease at t={a.timestamp}")
        if dt > gap_cutoff_s:
            continue
        day = ts_to_date(a.timestamp)
        totals[day] = totals.get(day, 0.0) + a.speed_kmh * dt / 3600.0
    return totals


def load_trip_log(path: str) -> tuple[CanTrace, list[TripSample]]:
    """Read a trip-log CSV, returning the message trace and time-sorted samples.

    Schema: `timestamp,speed_kmh,lat,lon,fuel_l,can_msg`; lat/lon/fuel_l may
    be empty. Raises SchemaError on a wrong header and ParseError with the
    offending line number otherwise.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise errors.SchemaError(f"{path}: empty file") from None
        if header != TRIP_LOG_HEADER:
            raise errors.SchemaError(f"{path}: expected header {TRIP_LOG_HEADER}, got {header}")
        samples: list[TripSample] = []
        message_times: list[float] = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(TRIP_LOG_HEADER):
                raise errors.ParseError(lineno, f"expected {len(TRIP_LOG_HEADER)} fields, got {len(row)}")
            try:
                ts = float(row[0])
                speed = float(row[1])
                lat = float(row[2]) if row[2] != "" else None
                lon = float(row[3]) if row[3] != "" else None
                fuel = float(row[4]) if row[4] != "" else None
                can_msg = int(row[5])
                sample = TripSample(timestamp=ts, speed_kmh=speed, lat=lat, lon=lon, fuel_l=fuel)
            except (ValueError, TypeError) as exc:
                raise errors.ParseError(lineno, str(exc)) from None
            if can_msg not in (0, 1):
                raise errors.ParseError(lineno, f"can_msg must be 0 or 1, got {can_msg}")
            samples.append(sample)
            if can_msg == 1:
                message_times.append(ts)
    samples.sort(key=lambda s: s.timestamp)
    message_times.sort()
    return CanTrace(message_times=message_times), samples


def save_trip_log(path: str, trace: CanTrace, samples: list[TripSample]) -> None:
    """Write a trip-log CSV (inverse of load_trip_log for message-bearing samples)."""
    msg_times = set(trace.message_times)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRIP_LOG_HEADER)
        for s in sorted(samples, key=lambda s: s.timestamp):
            writer.writerow([
                repr(s.timestamp), repr(s.speed_kmh),
                "" if s.lat is None else repr(s.lat),
                "" if s.lon is None else repr(s.lon),
                "" if s.fuel_l is None else repr(s.fuel_l),
                1 if s.timestamp in msg_times else 0,
            ])


def _poisson(rng: random.Random, lam: float) -> int:
    # Knuth's method; lam is small here (errands per week).
    if lam <= 0:
        return 0
    limit = math.exp(-lam)
    k, p = 0, 1.0
    while True:
        p *= rng.random()
        if p <= limit:
            return k
        k += 1


def _offset_deg(lat: float, dx_m: float, dy_m: float) -> tuple[float, float]:
    dlat = dy_m / 111_194.9
    dlon = dx_m / (111_194.9 * max(0.01, math.cos(math.radians(lat))))
    return dlat, dlon


def generate_synthetic_log(profile: DriverProfile, weeks: int,
                           sample_period_s: float = 5.0,
                           start_day: date = date(2025, 1, 6),
                           ) -> tuple[CanTrace, list[TripSample], dict[date, float]]:
    """Simulate `weeks` of driving for a synthetic driver.

    Returns the message trace, GPS/speed samples and the ground-truth daily
    traveled km (geodesic leg lengths, for oracle comparisons). Deterministic
    for a fixed (profile, weeks): the only randomness source is the profile
    seed. `start_day` must be a Monday so schedules line up with weekdays.
    """
    if weeks < 1:
        raise ValueError("weeks must be >= 1")
    if start_day.weekday() != 0:
        raise ValueError("start_day must be a Monday")
    for day_name, seq in profile.schedule.items():
        if day_name not in WEEKDAYS:
            raise errors.InvalidProfile(f"unknown weekday {day_name!r}")
        for name in seq:
            if name not in profile.anchors:
                raise errors.InvalidProfile(f"schedule references undefined anchor {name!r}")
    for name in profile.errand_targets:
        if name not in profile.anchors:
            raise errors.InvalidProfile(f"errand target {name!r} not an anchor")
    if profile.errand_rate > 0 and not profile.errand_targets:
        raise errors.InvalidProfile("errand_rate > 0 but no errand_targets")

    rng = random.Random(profile.seed)

    # Materialize the per-calendar-day visit sequences, with errands spliced
    # in as round trips from a scheduled anchor.
    day_plans: list[tuple[date, list[str]]] = []
    for w in range(weeks):
        week_plans: list[list[str]] = []
        for d in range(7):
            cal_day = start_day + timedelta(days=7 * w + d)
            week_plans.append(list(profile.schedule.get(WEEKDAYS[d], [])))
        for _ in range(_poisson(rng, profile.errand_rate)):
            candidates = [i for i, seq in enumerate(week_plans) if seq]
            if not candidates:
                break
            di = rng.choice(candidates)
            seq = week_plans[di]
            # Errands are end-of-day round trips, so the habitual part of the
            # day stays intact and each errand adds 2 x dist(last stop, target).
            target = rng.choice(profile.errand_targets)
            seq.extend([target, seq[-1]])
        for d in range(7):
            day_plans.append((start_day + timedelta(days=7 * w + d), week_plans[d]))

    samples: list[TripSample] = []
    message_times: list[float] = []
    truth: dict[date, float] = {}
    noise_frac = profile.speed_noise_pct / 100.0

    for cal_day, seq in day_plans:
        truth.setdefault(cal_day, 0.0)
        if len(seq) < 2:
            continue
        day_start = datetime(cal_day.year, cal_day.month, cal_day.day,
                             7, 0, 0, tzinfo=timezone.utc).timestamp()
        t = day_start
        for a_name, b_name in zip(seq, seq[1:]):
            a = profile.anchors[a_name]
            b = profile.anchors[b_name]
            dist_km = haversine_m(a[0], a[1], b[0], b[1]) / 1000.0
            truth[cal_day] += dist_km
            trip_speed = profile.cruise_speed_kmh * (1.0 + rng.uniform(-0.1, 0.1))
            covered = 0.0
            while covered < dist_km:
                speed = max(1.0, trip_speed * (1.0 + noise_frac * rng.uniform(-1.0, 1.0)))
                frac = min(1.0, covered / dist_km) if dist_km > 0 else 1.0
                lat = a[0] + frac * (b[0] - a[0])
                lon = a[1] + frac * (b[1] - a[1])
                dlat, dlon = _offset_deg(lat,
                                         rng.gauss(0.0, profile.gps_noise_m),
                                         rng.gauss(0.0, profile.gps_noise_m))
                samples.append(TripSample(timestamp=t, speed_kmh=speed,
                                          lat=lat + dlat, lon=lon + dlon))
                message_times.append(t)
                covered += speed * sample_period_s / 3600.0
                t += sample_period_s
            # Arrival fix: zero speed, parked at the destination.
            dlat, dlon = _offset_deg(b[0],
                                     rng.gauss(0.0, profile.gps_noise_m),
                                     rng.gauss(0.0, profile.gps_noise_m))
            samples.append(TripSample(timestamp=t, speed_kmh=0.0,
                                      lat=b[0] + dlat, lon=b[1] + dlon))
            message_times.append(t)
            t += rng.uniform(1800.0, 5400.0)  # parked: bus silent

    return CanTrace(message_times=message_times), samples, truth
