"""Daily zone-level outage and food-access metrics.

Scalar functions operate on one zone-day and are the reference
definitions; the ``daily_*`` table builders compute the same quantities for
every zone and day of a study window in vectorized form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .config import StudyWindow

EARTH_RADIUS_KM = 6378.137
INTERVAL_HOURS = 0.25

OUTAGE_METRICS = ("intensity", "duration")
ACCESS_METRICS = ("redundancy", "frequency", "proximity")
METRICS = OUTAGE_METRICS + ACCESS_METRICS + ("shortest_distance",)

# coverage flags
NO_QUALIFYING = "no_qualifying_intervals"
NO_TRIPS = "no_trips"
CONSTANT_RANGE = "constant_range"

__all__ = [
    "EARTH_RADIUS_KM",
    "METRICS",
    "OUTAGE_METRICS",
    "ACCESS_METRICS",
    "ZeroBaselineError",
    "DailySeries",
    "FacilityActivity",
    "haversine",
    "outage_fractions",
    "outage_intensity",
    "outage_duration",
    "redundancy",
    "frequency",
    "proximity",
    "shortest_distance",
    "facility_inactivity",
    "moving_average",
    "pct_change_vs_baseline",
    "normalize_minmax",
    "daily_outage_metrics",
    "daily_access_metrics",
    "static_shortest_distance",
    "facility_activity_table",
    "wide_series",
]


class ZeroBaselineError(ValueError):
    """Baseline mean is zero, so a relative change is undefined."""


@dataclass
class DailySeries:
    zone_id: str
    metric: str
    dates: tuple[date, ...]
    values: np.ndarray
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if len(self.dates) != self.values.size:
            raise ValueError("one value per date required")
        if not self.flags:
            self.flags = ("",) * len(self.dates)


@dataclass
class FacilityActivity:
    poi_id: str
    baseline_mean_daily_visits: float
    disruption_visits: dict[date, float]
    inactive_days: set[date] = field(default_factory=set)
    disruption_mean_daily_visits: float = 0.0
    inactive: bool | None = None  # None when the baseline is zero


def _check_coords(lat, lon) -> None:
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    if np.any(~np.isfinite(lat)) or np.any(np.abs(lat) > 90):
        raise ValueError("latitude out of range [-90, 90]")
    if np.any(~np.isfinite(lon)) or np.any(np.abs(lon) > 180):
        raise ValueError("longitude out of range [-180, 180]")


def haversine(lat1, lon1, lat2, lon2):
    """Great-circle distance in km on a sphere of radius 6378.137 km.

    Accepts scalars or broadcastable arrays of degrees.
    """
    _check_coords(lat1, lon1)
    _check_coords(lat2, lon2)
    phi1 = np.radians(lat1)
    phi2 = np.radians(lat2)
    dphi = phi2 - phi1
    dlam = np.radians(np.asarray(lon2, dtype=float) - np.asarray(lon1, dtype=float))
    h = np.sin(dphi / 2.0) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlam / 2.0) ** 2
    d = 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))
    if np.ndim(d) == 0:
        return float(d)
    return d


def outage_fractions(customers_out, customers_total) -> np.ndarray:
    out = np.asarray(customers_out, dtype=float)
    total = np.asarray(customers_total, dtype=float)
    if np.any(total <= 0):
        raise ValueError("customers_total must be positive")
    return out / total


def outage_intensity(fractions: Sequence[float], threshold: float = 0.001) -> tuple[float, int]:
    """Mean outage fraction over qualifying intervals and their count.

    Intervals below ``threshold`` are dropped; with none left the intensity
    is 0.0 (the caller flags it).
    """
    p = np.asarray(fractions, dtype=float)
    keep = p[p >= threshold]
    if keep.size == 0:
        return 0.0, 0
    return float(keep.mean()), int(keep.size)


def outage_duration(fractions: Sequence[float], threshold: float = 0.001) -> float:
    """Hours above the threshold: a quarter hour per qualifying interval."""
    p = np.asarray(fractions, dtype=float)
    return INTERVAL_HOURS * int((p >= threshold).sum())


def _trip_arrays(poi_ids, counts):
    ids = np.asarray(list(poi_ids), dtype=object)
    cnt = np.ones(ids.size) if counts is None else np.asarray(counts, dtype=float)
    if cnt.size != ids.size:
        raise ValueError("poi_ids and counts differ in length")
    keep = cnt >= 1
    return ids[keep], cnt[keep]


def redundancy(poi_ids: Iterable[str], counts: Sequence[float] | None = None) -> int:
    """Number of distinct POIs visited (count >= 1)."""
    ids, _ = _trip_arrays(poi_ids, counts)
    return len(set(ids.tolist()))


def frequency(poi_ids: Iterable[str], counts: Sequence[float] | None = None) -> tuple[float, bool]:
    """Visits per distinct POI; ``(0.0, True)`` on a day without trips."""
    ids, cnt = _trip_arrays(poi_ids, counts)
    r = len(set(ids.tolist()))
    if r == 0:
        return 0.0, True
    return float(cnt.sum()) / r, False


def proximity(
    poi_ids: Iterable[str],
    counts: Sequence[float] | None,
    poi_coords: Mapping[str, tuple[float, float]],
    zone_lat: float,
    zone_lon: float,
    per_trip: bool = False,
) -> tuple[float, bool]:
    """Volume-weighted centroid-to-POI distance divided by redundancy.

    ``per_trip=True`` divides by total volume instead (a per-trip mean),
    kept for sensitivity analysis.
    """
    ids, cnt = _trip_arrays(poi_ids, counts)
    if ids.size == 0:
        return 0.0, True
    try:
        lat = np.array([poi_coords[p][0] for p in ids])
        lon = np.array([poi_coords[p][1] for p in ids])
    except KeyError as exc:
        raise KeyError(f"POI {exc.args[0]!r} has no coordinates") from None
    dist = haversine(zone_lat, zone_lon, lat, lon)
    weighted = float(np.sum(dist * cnt))
    denom = cnt.sum() if per_trip else len(set(ids.tolist()))
    return weighted / denom, False


def shortest_distance(zone_lat: float, zone_lon: float, poi_lats, poi_lons) -> float:
    """Distance from a zone centroid to the nearest of the given POIs.

    Pass all registered POIs for the static variant or the POIs visited
    on one day for the behavioral variant.
    """
    lat = np.atleast_1d(np.asarray(poi_lats, dtype=float))
    lon = np.atleast_1d(np.asarray(poi_lons, dtype=float))
    if lat.size == 0:
        raise ValueError("shortest distance undefined for an empty POI set")
    return float(np.min(haversine(zone_lat, zone_lon, lat, lon)))


def _is_drop(visits, baseline, drop_threshold):
    # inclusive, with slack for 1 - 0.9 != 0.1 in binary floating point
    limit = (1.0 - drop_threshold) * baseline
    return visits <= limit + 1e-9 * baseline


def facility_inactivity(
    poi_id: str,
    visits_by_day: Mapping[date, float],
    window: StudyWindow,
    drop_threshold: float = 0.90,
) -> FacilityActivity:
    """Classify a facility's disruption days against its baseline mean.

    Days absent from ``visits_by_day`` count as zero visits. A zero
    baseline leaves ``inactive`` as ``None``.
    """
    base_days = window.baseline_days()
    dis_days = window.disruption_days()
    baseline = sum(float(visits_by_day.get(d, 0.0)) for d in base_days) / len(base_days)
    dis = {d: float(visits_by_day.get(d, 0.0)) for d in dis_days}
    dis_mean = sum(dis.values()) / len(dis_days)
    act = FacilityActivity(poi_id, baseline, dis, disruption_mean_daily_visits=dis_mean)
    if baseline <= 0:
        return act
    act.inactive_days = {d for d, v in dis.items() if _is_drop(v, baseline, drop_threshold)}
    act.inactive = bool(_is_drop(dis_mean, baseline, drop_threshold))
    return act


def moving_average(values: Sequence[float], window: int = 3) -> np.ndarray:
    """Centered moving average; the window shrinks at both edges."""
    x = np.asarray(values, dtype=float)
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd integer")
    if x.ndim != 1:
        raise ValueError("expected a 1-d series")
    half = window // 2
    out = np.empty_like(x)
    for i in range(x.size):
        seg = x[max(0, i - half):i + half + 1]
        # constant stretches pass through exactly; rounding never leaves [min, max]
        out[i] = seg[0] if np.all(seg == seg[0]) else min(max(seg.mean(), seg.min()), seg.max())
    return out


def pct_change_vs_baseline(values: Sequence[float], baseline_mask: Sequence[bool]) -> np.ndarray:
    """Relative change ``(v - m) / m`` against the baseline-period mean ``m``."""
    x = np.asarray(values, dtype=float)
    mask = np.asarray(baseline_mask, dtype=bool)
    if mask.shape != x.shape or not mask.any():
        raise ValueError("baseline mask must match the series and select at least one day")
    m = x[mask].mean()
    if m == 0:
        raise ZeroBaselineError("baseline mean is zero")
    return (x - m) / m


def normalize_minmax(values: Sequence[float]) -> tuple[np.ndarray, bool]:
    """Scale to [0, 1]; a constant input maps to zeros and is flagged."""
    x = np.asarray(values, dtype=float)
    lo, hi = float(np.min(x)), float(np.max(x))
    if hi == lo:
        return np.zeros_like(x), True
    out = (x - lo) / (hi - lo)
    out[x == lo] = 0.0
    out[x == hi] = 1.0
    return out, False


def _complete_grid(df: pd.DataFrame, zone_ids: Sequence[str], days: Sequence[date], metrics: Sequence[str], empty_flag: str) -> pd.DataFrame:
    grid = pd.MultiIndex.from_product([sorted(zone_ids), list(days)], names=["zone_id", "date"])
    df = df.reindex(grid)
    missing = df[metrics[0]].isna()
    for m in metrics:
        df[m] = df[m].fillna(0.0)
    df["flag"] = np.where(missing, empty_flag, df.get("flag", pd.Series("", index=df.index)).fillna(""))
    return df


def _to_long(wide: pd.DataFrame, metrics: Sequence[str], flags: Mapping[str, pd.Series]) -> pd.DataFrame:
    parts = []
    for m in metrics:
        part = wide[[m]].rename(columns={m: "value"}).reset_index()
        part.insert(2, "metric", m)
        part["flag"] = flags[m].to_numpy()
        parts.append(part)
    out = pd.concat(parts, ignore_index=True)
    return out.sort_values(["zone_id", "date", "metric"], kind="mergesort").reset_index(drop=True)


def daily_outage_metrics(outages: pd.DataFrame, window: StudyWindow, zone_ids: Sequence[str] | None = None, threshold: float = 0.001) -> pd.DataFrame:
    """Long table ``zone_id, date, metric, value, flag`` of intensity and duration."""
    df = outages.sort_values(["zone_id", "timestamp"], kind="mergesort")
    frac = df["customers_out"].to_numpy(float) / df["customers_total"].to_numpy(float)
    qual = frac >= threshold
    work = pd.DataFrame(
        {
            "zone_id": df["zone_id"].to_numpy(),
            "date": df["timestamp"].dt.date.to_numpy(),
            "q": qual.astype(np.int64),
            "p": np.where(qual, frac, 0.0),
        }
    )
    g = work.groupby(["zone_id", "date"], sort=True)
    agg = pd.DataFrame({"n": g["q"].sum(), "s": g["p"].sum()})
    agg["intensity"] = np.where(agg["n"] > 0, agg["s"] / agg["n"].where(agg["n"] > 0, 1), 0.0)
    agg["duration"] = INTERVAL_HOURS * agg["n"]
    agg["flag"] = np.where(agg["n"] == 0, NO_QUALIFYING, "")
    zones = zone_ids if zone_ids is not None else sorted(work["zone_id"].unique())
    wide = _complete_grid(agg[["intensity", "duration", "flag"]], zones, window.days(), OUTAGE_METRICS, NO_QUALIFYING)
    return _to_long(wide, OUTAGE_METRICS, {"intensity": wide["flag"], "duration": wide["flag"]})


def _trip_distances(trips: pd.DataFrame, pois: pd.DataFrame, zones: pd.DataFrame) -> np.ndarray:
    plat = pois.set_index("poi_id")["lat"]
    plon = pois.set_index("poi_id")["lon"]
    zlat = zones.set_index("zone_id")["lat"]
    zlon = zones.set_index("zone_id")["lon"]
    try:
        a = plat.loc[trips["poi_id"]].to_numpy()
        b = plon.loc[trips["poi_id"]].to_numpy()
    except KeyError as exc:
        raise KeyError(f"trip references unknown POI: {exc}") from None
    try:
        c = zlat.loc[trips["home_zone_id"]].to_numpy()
        d = zlon.loc[trips["home_zone_id"]].to_numpy()
    except KeyError as exc:
        raise KeyError(f"trip references unknown zone: {exc}") from None
    return np.asarray(haversine(c, d, a, b))


def daily_access_metrics(
    trips: pd.DataFrame,
    pois: pd.DataFrame,
    zones: pd.DataFrame,
    window: StudyWindow,
    per_trip_proximity: bool = False,
) -> pd.DataFrame:
    """Long table of redundancy, frequency, proximity and visited shortest distance."""
    df = trips[trips["count"] >= 1].sort_values(["home_zone_id", "date", "poi_id"], kind="mergesort")
    dist = _trip_distances(df, pois, zones)
    work = pd.DataFrame(
        {
            "zone_id": df["home_zone_id"].to_numpy(),
            "date": df["date"].to_numpy(),
            "poi_id": df["poi_id"].to_numpy(),
            "count": df["count"].to_numpy(float),
        }
    )
    work["wd"] = dist * work["count"].to_numpy()
    work["dist"] = dist
    g = work.groupby(["zone_id", "date"], sort=True)
    agg = pd.DataFrame(
        {
            "redundancy": g["poi_id"].nunique().astype(float),
            "volume": g["count"].sum(),
            "wd": g["wd"].sum(),
            "shortest_distance": g["dist"].min(),
        }
    )
    agg["frequency"] = agg["volume"] / agg["redundancy"]
    denom = agg["volume"] if per_trip_proximity else agg["redundancy"]
    agg["proximity"] = agg["wd"] / denom
    agg["flag"] = ""
    metrics = ACCESS_METRICS + ("shortest_distance",)
    wide = _complete_grid(agg[list(metrics) + ["flag"]], zones["zone_id"].tolist(), window.days(), metrics, NO_TRIPS)
    flags = {m: wide["flag"] for m in metrics}
    # redundancy of an empty day is a true zero, not a fallback
    flags["redundancy"] = pd.Series("", index=wide.index)
    return _to_long(wide, metrics, flags)


def static_shortest_distance(zones: pd.DataFrame, pois: pd.DataFrame) -> pd.Series:
    """Per-zone distance to the nearest registered POI."""
    if len(pois) == 0:
        raise ValueError("shortest distance undefined for an empty POI set")
    plat = pois["lat"].to_numpy(float)
    plon = pois["lon"].to_numpy(float)
    out = {}
    for z, lat, lon in zones[["zone_id", "lat", "lon"]].itertuples(index=False):
        out[z] = shortest_distance(lat, lon, plat, plon)
    return pd.Series(out, name="shortest_distance").sort_index()


def facility_activity_table(trips: pd.DataFrame, pois: pd.DataFrame, window: StudyWindow, drop_threshold: float = 0.90) -> pd.DataFrame:
    """Per-POI baseline/disruption visit means and inactivity classification.

    ``inactive`` is ``<NA>`` for zero-baseline facilities, which are
    flagged and left unclassified.
    """
    base_days = window.baseline_days()
    dis_days = window.disruption_days()
    daily = trips.groupby(["poi_id", "date"], sort=True)["count"].sum()
    daily = daily.reset_index()
    is_base = daily["date"].isin(base_days)
    is_dis = daily["date"].isin(dis_days)
    base = daily[is_base].groupby("poi_id")["count"].sum() / len(base_days)
    dis = daily[is_dis].groupby("poi_id")["count"].sum() / len(dis_days)
    ids = sorted(pois["poi_id"].tolist())
    base = base.reindex(ids, fill_value=0.0).astype(float)
    dis = dis.reindex(ids, fill_value=0.0).astype(float)
    piv = daily[is_dis].pivot(index="poi_id", columns="date", values="count")
    piv = piv.reindex(index=ids, columns=dis_days).fillna(0.0)
    limit = ((1.0 - drop_threshold) * base + 1e-9 * base).to_numpy()[:, None]
    day_drop = piv.to_numpy(float) <= limit
    has_base = base.to_numpy() > 0
    n_inactive = np.where(has_base, day_drop.sum(axis=1), 0)
    inactive = pd.array(np.where(has_base, _is_drop(dis.to_numpy(), base.to_numpy(), drop_threshold), False), dtype="boolean")
    inactive[~has_base] = pd.NA
    return pd.DataFrame(
        {
            "poi_id": ids,
            "baseline_mean_visits": base.to_numpy(),
            "disruption_mean_visits": dis.to_numpy(),
            "inactive_days": n_inactive.astype(int),
            "inactive": inactive,
            "flag": np.where(has_base, "", "zero_baseline"),
        }
    )


def wide_series(metrics_long: pd.DataFrame, metric: str, window: StudyWindow | None = None) -> pd.DataFrame:
    """Zones x dates matrix of one metric from the long table."""
    sub = metrics_long[metrics_long["metric"] == metric]
    wide = sub.pivot(index="zone_id", columns="date", values="value").sort_index()
    if window is not None:
        wide = wide.reindex(columns=window.days())
    return wide
