"""CSV ingestion, validation and home-zone assignment."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .config import StudyWindow
from .metrics import haversine

log = logging.getLogger(__name__)

__all__ = [
    "SCHEMAS",
    "SchemaError",
    "ValidationError",
    "DuplicateKeyError",
    "RowError",
    "LoadResult",
    "load_table",
    "write_table",
    "nearest_zone",
    "assign_home_zones",
    "aggregate_trips",
]


@dataclass(frozen=True)
class Schema:
    name: str
    columns: tuple[str, ...]
    key: tuple[str, ...]


SCHEMAS: dict[str, Schema] = {
    "outage": Schema("outage", ("zone_id", "timestamp", "customers_out", "customers_total"), ("zone_id", "timestamp")),
    "trip": Schema("trip", ("home_zone_id", "poi_id", "date", "count"), ("home_zone_id", "poi_id", "date")),
    "poi": Schema("poi", ("poi_id", "lat", "lon", "naics"), ("poi_id",)),
    "zone": Schema("zone", ("zone_id", "lat", "lon", "road_density", "median_income"), ("zone_id",)),
    "ping": Schema("ping", ("device_id", "lat", "lon", "timestamp"), ()),
    "visit": Schema("visit", ("device_id", "poi_id", "timestamp"), ()),
}


class SchemaError(ValueError):
    pass


class DuplicateKeyError(ValueError):
    pass


@dataclass(frozen=True)
class RowError:
    line: int
    column: str
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.column}: {self.message}"


class ValidationError(ValueError):
    def __init__(self, path, errors: Sequence[RowError]):
        self.errors = list(errors)
        shown = "; ".join(str(e) for e in self.errors[:5])
        more = f" (+{len(self.errors) - 5} more)" if len(self.errors) > 5 else ""
        super().__init__(f"{path}: {len(self.errors)} invalid row(s): {shown}{more}")


@dataclass
class LoadResult:
    table: pd.DataFrame
    n_rows: int
    rejects: list[RowError] = field(default_factory=list)

    @property
    def n_valid(self) -> int:
        return len(self.table)


class _Checker:
    def __init__(self, raw: pd.DataFrame):
        self.raw = raw
        self.bad = np.zeros(len(raw), dtype=bool)
        self.errors: list[RowError] = []

    def flag(self, mask, column: str, message: str) -> None:
        mask = np.asarray(mask, dtype=bool) & ~self.bad
        for i in np.flatnonzero(mask):
            val = self.raw[column].iat[i] if column in self.raw else ""
            self.errors.append(RowError(int(i) + 2, column, f"{message} (got {val!r})"))
        self.bad |= mask

    def number(self, column: str, integer: bool = False) -> pd.Series:
        vals = pd.to_numeric(self.raw[column], errors="coerce")
        self.flag(vals.isna().to_numpy(), column, "not a number")
        if integer:
            frac = vals.notna() & (vals != np.floor(vals.fillna(0)))
            self.flag(frac.to_numpy(), column, "not an integer")
        return vals

    def text(self, column: str) -> pd.Series:
        vals = self.raw[column].str.strip()
        self.flag((vals == "").to_numpy(), column, "empty value")
        return vals

    def timestamp(self, column: str) -> pd.Series:
        vals = pd.to_datetime(self.raw[column], utc=True, format="ISO8601", errors="coerce")
        self.flag(vals.isna().to_numpy(), column, "not an ISO-8601 timestamp")
        return vals

    def day(self, column: str) -> pd.Series:
        vals = pd.to_datetime(self.raw[column], format="%Y-%m-%d", errors="coerce")
        self.flag(vals.isna().to_numpy(), column, "not an ISO date (YYYY-MM-DD)")
        return vals


def _read_raw(path: Path, schema: Schema) -> pd.DataFrame:
    if not path.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    raw.columns = [c.strip() for c in raw.columns]
    missing = [c for c in schema.columns if c not in raw.columns]
    if missing:
        raise SchemaError(f"{path}: missing column {missing[0]!r} for {schema.name} schema (expected {','.join(schema.columns)})")
    extra = [c for c in raw.columns if c not in schema.columns]
    if extra:
        raise SchemaError(f"{path}: unexpected column {extra[0]!r} for {schema.name} schema")
    return raw[list(schema.columns)]


def _check_coords(chk: _Checker, lat: pd.Series, lon: pd.Series) -> None:
    chk.flag(((lat < -90) | (lat > 90)).to_numpy(), "lat", "latitude outside [-90, 90]")
    chk.flag(((lon < -180) | (lon > 180)).to_numpy(), "lon", "longitude outside [-180, 180]")


def load_table(
    path: str | Path,
    schema: str,
    window: StudyWindow | None = None,
    zone_ids: Sequence[str] | None = None,
    poi_ids: Sequence[str] | None = None,
    strict: bool = False,
) -> LoadResult:
    """Parse and validate one input CSV.

    Rows that break a type invariant are rejected with their 1-based file
    line number (header is line 1). ``strict=True`` raises
    :class:`ValidationError` instead of returning rejects. Missing columns
    raise :class:`SchemaError`; duplicate keys among valid rows raise
    :class:`DuplicateKeyError`. Trip rows are also checked against the
    study window and the zone/POI registries when those are given.
    """
    path = Path(path)
    if schema not in SCHEMAS:
        raise SchemaError(f"unknown schema {schema!r}; choose from {sorted(SCHEMAS)}")
    sch = SCHEMAS[schema]
    raw = _read_raw(path, sch)
    chk = _Checker(raw)
    out = pd.DataFrame(index=raw.index)

    if schema == "outage":
        out["zone_id"] = chk.text("zone_id")
        ts = chk.timestamp("timestamp")
        aligned = ts.notna() & ((ts.dt.minute % 15 != 0) | (ts.dt.second != 0) | (ts.dt.microsecond != 0))
        chk.flag(aligned.to_numpy(), "timestamp", "not on a 15-minute boundary")
        out["timestamp"] = ts
        co = chk.number("customers_out", integer=True)
        ct = chk.number("customers_total", integer=True)
        chk.flag((co < 0).to_numpy(), "customers_out", "negative count")
        chk.flag((ct <= 0).to_numpy(), "customers_total", "must be positive")
        chk.flag((co > ct).to_numpy(), "customers_out", "exceeds customers_total")
        out["customers_out"] = co
        out["customers_total"] = ct
    elif schema == "trip":
        out["home_zone_id"] = chk.text("home_zone_id")
        out["poi_id"] = chk.text("poi_id")
        day = chk.day("date")
        cnt = chk.number("count", integer=True)
        chk.flag((cnt < 1).to_numpy(), "count", "count must be >= 1")
        if window is not None:
            lo, hi = pd.Timestamp(window.start_date), pd.Timestamp(window.end_date)
            chk.flag((day.notna() & ((day < lo) | (day > hi))).to_numpy(), "date", "outside study window")
        if zone_ids is not None:
            chk.flag((~out["home_zone_id"].isin(set(zone_ids))).to_numpy(), "home_zone_id", "unknown zone")
        if poi_ids is not None:
            chk.flag((~out["poi_id"].isin(set(poi_ids))).to_numpy(), "poi_id", "unknown POI")
        out["date"] = day
        out["count"] = cnt
    elif schema == "poi":
        out["poi_id"] = chk.text("poi_id")
        lat, lon = chk.number("lat"), chk.number("lon")
        _check_coords(chk, lat, lon)
        naics = raw["naics"].str.strip()
        chk.flag((~naics.str.fullmatch(r"\d{6}")).to_numpy(), "naics", "not a 6-digit NAICS code")
        out["lat"], out["lon"], out["naics"] = lat, lon, naics
    elif schema == "zone":
        out["zone_id"] = chk.text("zone_id")
        lat, lon = chk.number("lat"), chk.number("lon")
        _check_coords(chk, lat, lon)
        rd = chk.number("road_density")
        chk.flag((rd < 0).to_numpy(), "road_density", "negative road density")
        out["lat"], out["lon"], out["road_density"] = lat, lon, rd
        out["median_income"] = chk.number("median_income")
    elif schema == "ping":
        out["device_id"] = chk.text("device_id")
        lat, lon = chk.number("lat"), chk.number("lon")
        _check_coords(chk, lat, lon)
        out["lat"], out["lon"] = lat, lon
        out["timestamp"] = chk.timestamp("timestamp")
    elif schema == "visit":
        out["device_id"] = chk.text("device_id")
        out["poi_id"] = chk.text("poi_id")
        out["timestamp"] = chk.timestamp("timestamp")

    table = out[~chk.bad].copy()
    for col in ("customers_out", "customers_total", "count"):
        if col in table:
            table[col] = table[col].astype(np.int64)
    if "date" in table:
        table["date"] = table["date"].dt.date
    if sch.key:
        dup = table.duplicated(list(sch.key), keep=False)
        if dup.any():
            lines = (table.index[dup.to_numpy()] + 2).tolist()
            raise DuplicateKeyError(f"{path}: duplicate key {sch.key} on lines {lines[:10]}")
    table = table.reset_index(drop=True)
    errors = sorted(chk.errors, key=lambda e: e.line)
    if strict and errors:
        raise ValidationError(path, errors)
    if errors:
        log.warning("%s: rejected %d of %d rows", path, int(chk.bad.sum()), len(raw))
    return LoadResult(table, len(raw), errors)


def _fmt_float(x: float) -> str:
    return repr(float(x))


def _format_repeated(col: pd.Series, fmt) -> np.ndarray:
    codes, uniques = pd.factorize(col, sort=False)
    labels = np.array([fmt(u) for u in uniques], dtype=object)
    return labels[codes]


def write_table(table: pd.DataFrame, path: str | Path, schema: str) -> None:
    """Write records in the exact schema layout; inverse of :func:`load_table`."""
    sch = SCHEMAS[schema]
    df = table[list(sch.columns)].copy()
    for col in df.columns:
        if col == "timestamp":
            stamps = pd.to_datetime(df[col], utc=True)
            df[col] = _format_repeated(stamps, lambda t: t.strftime("%Y-%m-%dT%H:%M:%SZ"))
        elif col == "date":
            df[col] = _format_repeated(df[col], lambda d: d if isinstance(d, str) else d.isoformat())
        elif df[col].dtype.kind == "f":
            df[col] = [_fmt_float(v) for v in df[col]]
    df.to_csv(path, index=False, lineterminator="\n")


def nearest_zone(lat, lon, zones: pd.DataFrame, chunk: int = 20_000) -> np.ndarray:
    """Zone id with the nearest centroid for each point; ties go to the smallest id."""
    z = zones.sort_values("zone_id", kind="mergesort")
    zid = z["zone_id"].to_numpy()
    zlat = z["lat"].to_numpy(float)
    zlon = z["lon"].to_numpy(float)
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    out = np.empty(lat.size, dtype=object)
    for s in range(0, lat.size, chunk):
        d = haversine(lat[s:s + chunk, None], lon[s:s + chunk, None], zlat[None, :], zlon[None, :])
        out[s:s + chunk] = zid[np.argmin(d, axis=1)]
    return out


@dataclass
class HomeAssignment:
    homes: dict[str, str]
    n_devices: int
    n_excluded: int


def assign_home_zones(
    pings: pd.DataFrame,
    zones: pd.DataFrame,
    night_window: tuple[int, int] = (20, 6),
    tz: str = "UTC",
    observation: tuple | None = None,
) -> HomeAssignment:
    """Map each device to the zone of its most frequent nighttime location.

    A ping is nighttime when its local hour ``h`` satisfies
    ``h >= start or h < end`` (for a window crossing midnight). Each
    nighttime ping votes for its nearest zone centroid; ties between zones
    go to the smallest zone id. Devices without nighttime pings are
    excluded and counted. ``observation`` optionally restricts pings to a
    ``(first_day, last_day)`` range.
    """
    if len(pings) == 0:
        log.warning("no pings supplied; home assignment is empty")
        return HomeAssignment({}, 0, 0)
    devices = pd.unique(pings["device_id"])
    ts = pd.to_datetime(pings["timestamp"], utc=True).dt.tz_convert(tz)
    keep = np.ones(len(pings), dtype=bool)
    if observation is not None:
        d = ts.dt.date
        keep &= ((d >= observation[0]) & (d <= observation[1])).to_numpy()
    start, end = night_window
    hour = ts.dt.hour.to_numpy()
    night = (hour >= start) | (hour < end) if start > end else (hour >= start) & (hour < end)
    keep &= night
    sub = pings.loc[keep, ["device_id", "lat", "lon"]]
    zone = nearest_zone(sub["lat"].to_numpy(), sub["lon"].to_numpy(), zones)
    votes = pd.DataFrame({"device_id": sub["device_id"].to_numpy(), "zone_id": zone})
    counts = votes.groupby(["device_id", "zone_id"]).size().reset_index(name="n")
    counts = counts.sort_values(["device_id", "n", "zone_id"], ascending=[True, False, True], kind="mergesort")
    best = counts.drop_duplicates("device_id", keep="first")
    homes = dict(zip(best["device_id"], best["zone_id"]))
    return HomeAssignment(dict(sorted(homes.items())), len(devices), len(devices) - len(homes))


@dataclass
class AggregationResult:
    trips: pd.DataFrame
    n_dropped_devices: int
    n_dropped_events: int


def aggregate_trips(visits: pd.DataFrame, homes: Mapping[str, str], tz: str = "UTC") -> AggregationResult:
    """Sum device-level visit events into ``(home_zone, poi, date)`` counts.

    Events carry either a ``timestamp`` (converted to a local date) or a
    ``date`` and an optional ``count`` (default 1). Devices without a home
    zone are dropped and counted.
    """
    df = visits
    if "date" in df:
        day = pd.Series(df["date"].to_numpy(), index=df.index)
    else:
        day = pd.to_datetime(df["timestamp"], utc=True).dt.tz_convert(tz).dt.date
    cnt = df["count"].to_numpy(np.int64) if "count" in df else np.ones(len(df), dtype=np.int64)
    zone = df["device_id"].map(homes)
    known = zone.notna().to_numpy()
    dropped_devices = pd.unique(df.loc[~known, "device_id"]).size
    work = pd.DataFrame(
        {"home_zone_id": zone.to_numpy()[known], "poi_id": df["poi_id"].to_numpy()[known], "date": day.to_numpy()[known], "count": cnt[known]}
    )
    trips = (
        work.groupby(["home_zone_id", "poi_id", "date"], sort=True)["count"].sum().reset_index()
    )
    trips["count"] = trips["count"].astype(np.int64)
    return AggregationResult(trips, int(dropped_devices), int((~known).sum()))
