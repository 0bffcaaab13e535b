"""Fuel-station catalog, price history and the cheapest-day forecast.

The weekly price forecast is weekday-seasonal persistence: for every
station and weekday, the forecast is the mean of that weekday's observed
prices over the last few weeks, falling back to the station's most recent
observation. The area price for a weekday is the cheapest station's
forecast, and the refueling day is the weekday with the lowest area price.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date, timedelta

from . import errors
from .geo import valid_coords
from .telemetry import WEEKDAYS

STATIONS_HEADER = ["station_id", "lat", "lon", "brand", "fuel_type",
                   "price_eur_l", "observed_date"]

STALE_AFTER_DAYS = 14


@dataclass(frozen=True)
class Station:
    station_id: str
    lat: float
    lon: float
    brand: str
    # fuel_type -> (latest observation date, price €/L)
    prices: dict[str, tuple[date, float]] = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class PriceHistory:
    # (station_id, fuel_type) -> [(date, price €/L)] sorted by date
    series: dict[tuple[str, str], tuple[tuple[date, float], ...]]

    def latest_date(self) -> date:
        return max(d for obs in self.series.values() for d, _ in obs)


@dataclass(frozen=True)
class WeeklyPriceForecast:
    fuel_type: str
    # station_id -> weekday -> €/L
    station_prices: dict[str, dict[str, float]]
    # weekday -> cheapest forecast €/L over stations
    area_prices: dict[str, float]
    stale_stations: frozenset[str] = frozenset()


def load_stations(path: str) -> tuple[list[Station], PriceHistory]:
    """Read the station CSV (one row per station x fuel x observation date)."""
    rows = []
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            if next(reader, None) != STATIONS_HEADER:
                raise errors.SchemaError(f"{path}: bad header")
            for lineno, row in enumerate(reader, start=2):
                try:
                    sid, brand, fuel = row[0], row[3], row[4]
                    lat, lon = float(row[1]), float(row[2])
                    price = float(row[5])
                    observed = date.fromisoformat(row[6])
                except (ValueError, IndexError) as exc:
                    raise errors.ParseError(lineno, str(exc)) from None
                if not valid_coords(lat, lon):
                    raise errors.ParseError(lineno, f"invalid coordinates ({lat}, {lon})")
                if price <= 0:
                    raise errors.ParseError(lineno, f"price must be positive, got {price}")
                rows.append((sid, lat, lon, brand, fuel, price, observed))
    except OSError as exc:
        raise errors.IoError(str(exc)) from exc

    stations: dict[str, Station] = {}
    series: dict[tuple[str, str], list[tuple[date, float]]] = {}
    for sid, lat, lon, brand, fuel, price, observed in rows:
        if sid in stations:
            st = stations[sid]
            if (st.lat, st.lon, st.brand) != (lat, lon, brand):
                raise errors.DuplicateId(f"station {sid} redefined with different identity")
        else:
            stations[sid] = Station(station_id=sid, lat=lat, lon=lon, brand=brand)
        key = (sid, fuel)
        obs = series.setdefault(key, [])
        if any(d == observed for d, _ in obs):
            raise errors.DuplicateId(f"duplicate observation for {sid}/{fuel} on {observed}")
        obs.append((observed, price))

    for (sid, fuel), obs in series.items():
        obs.sort()
        stations[sid].prices[fuel] = obs[-1]
    history = PriceHistory(series={k: tuple(v) for k, v in series.items()})
    return list(stations.values()), history


def save_stations(stations: list[Station], history: PriceHistory, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(STATIONS_HEADER)
        by_id = {s.station_id: s for s in stations}
        for (sid, fuel) in sorted(history.series):
            st = by_id[sid]
            for d, price in history.series[(sid, fuel)]:
                writer.writerow([sid, repr(st.lat), repr(st.lon), st.brand,
                                 fuel, repr(price), d.isoformat()])


def forecast_week(history: PriceHistory, fuel_type: str,
                  lookback_weeks: int = 4) -> WeeklyPriceForecast:
    """Per-station, per-weekday price forecast plus the area (cheapest) price."""
    keys = [k for k in history.series if k[1] == fuel_type]
    if not keys:
        raise errors.EmptyHistory(f"no observations for fuel type {fuel_type!r}")
    anchor = history.latest_date()
    horizon = anchor - timedelta(weeks=lookback_weeks)
    stale_cutoff = anchor - timedelta(days=STALE_AFTER_DAYS)

    station_prices: dict[str, dict[str, float]] = {}
    stale: set[str] = set()
    for sid, fuel in keys:
        obs = history.series[(sid, fuel)]
        last_date, last_price = obs[-1]
        if last_date < stale_cutoff:
            stale.add(sid)
        per_day: dict[str, float] = {}
        for wd_index, wd in enumerate(WEEKDAYS):
            vals = [p for d, p in obs if d.weekday() == wd_index and d > horizon]
            per_day[wd] = sum(vals) / len(vals) if vals else last_price
        station_prices[sid] = per_day

    area = {wd: min(prices[wd] for prices in station_prices.values())
            for wd in WEEKDAYS}
    return WeeklyPriceForecast(fuel_type=fuel_type, station_prices=station_prices,
                               area_prices=area, stale_stations=frozenset(stale))


def cheapest_day(forecast: WeeklyPriceForecast) -> str:
    """Weekday with the lowest area price; ties go to the earliest weekday."""
    return min(WEEKDAYS, key=lambda wd: (forecast.area_prices[wd], WEEKDAYS.index(wd)))
