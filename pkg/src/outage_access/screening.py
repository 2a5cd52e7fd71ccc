"""Critical food facility screening.

Three criteria each intersect a zone or activity condition with a
top-quartile cut on baseline mean daily visits; the report is their
deduplicated union with per-criterion flags.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .ingest import nearest_zone


def percentile_rank(values: Sequence[float], q: float) -> float:
    """Quantile by linear interpolation between order statistics."""
    x = np.sort(np.asarray(values, dtype=float))
    if x.size == 0:
        raise ValueError("percentile of an empty sequence")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    pos = q * (x.size - 1)
    lo = int(np.floor(pos))
    hi = min(lo + 1, x.size - 1)
    frac = pos - lo
    if frac == 0.0 or x[hi] == x[lo]:
        return float(x[lo])
    return float(x[lo] + frac * (x[hi] - x[lo]))


def top_set(values: Mapping[str, float], q: float = 0.75) -> set[str]:
    thr = percentile_rank(list(values.values()), q)
    return {k for k, v in values.items() if v >= thr}


def bottom_set(values: Mapping[str, float], q: float = 0.25) -> set[str]:
    thr = percentile_rank(list(values.values()), q)
    return {k for k, v in values.items() if v <= thr}


def facility_zones(pois: pd.DataFrame, zones: pd.DataFrame) -> dict[str, str]:
    """POI -> zone with the nearest centroid."""
    zid = nearest_zone(pois["lat"].to_numpy(), pois["lon"].to_numpy(), zones)
    return dict(zip(pois["poi_id"], zid))


def _scoped_top(baseline: Mapping[str, float], eligible: Iterable[str], q: float, scope: str) -> set[str]:
    eligible = set(eligible)
    if scope == "region":
        return top_set(baseline, 1.0 - q) & eligible
    if scope == "within_zones":
        sub = {p: v for p, v in baseline.items() if p in eligible}
        return top_set(sub, 1.0 - q) if sub else set()
    raise ValueError(f"unknown percentile scope {scope!r}")


def criterion_hh_zones(
    poi_zone: Mapping[str, str],
    typologies: Mapping[str, str],
    baseline_visits: Mapping[str, float],
    q: float = 0.25,
    scope: str = "region",
) -> set[str]:
    """Facilities in high-outage/high-disruption zones with top-quartile baseline visits."""
    in_hh = {p for p, z in poi_zone.items() if typologies.get(z) == "HH"}
    return _scoped_top(baseline_visits, in_hh, q, scope)


def criterion_marginalized(
    poi_zone: Mapping[str, str],
    road_density: Mapping[str, float],
    baseline_visits: Mapping[str, float],
    q: float = 0.25,
    scope: str = "region",
) -> set[str]:
    """Facilities in bottom-quartile road-density zones with top-quartile baseline visits."""
    low_zones = bottom_set(road_density, q)
    in_low = {p for p, z in poi_zone.items() if z in low_zones}
    return _scoped_top(baseline_visits, in_low, q, scope)


def criterion_downtime(activity: pd.DataFrame, baseline_visits: Mapping[str, float] | None = None, q: float = 0.25) -> set[str]:
    """Inactive facilities (>= 90 % mean drop) with top-quartile baseline visits."""
    if baseline_visits is None:
        baseline_visits = dict(zip(activity["poi_id"], activity["baseline_mean_visits"]))
    inactive = set(activity.loc[activity["inactive"].fillna(False).astype(bool), "poi_id"])
    return top_set(baseline_visits, 1.0 - q) & inactive


@dataclass
class CriticalFacility:
    poi_id: str
    criterion_1: bool
    criterion_2: bool
    criterion_3: bool
    baseline_mean_daily_visits: float
    zone_id: str | None = None
    serving_zones: tuple[str, ...] = field(default_factory=tuple)


@dataclass
class ScreeningReport:
    facilities: list[CriticalFacility]

    @property
    def counts(self) -> dict[str, int]:
        return {
            "criterion_1": sum(f.criterion_1 for f in self.facilities),
            "criterion_2": sum(f.criterion_2 for f in self.facilities),
            "criterion_3": sum(f.criterion_3 for f in self.facilities),
            "union": len(self.facilities),
        }

    @property
    def ids(self) -> set[str]:
        return {f.poi_id for f in self.facilities}

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                (f.poi_id, int(f.criterion_1), int(f.criterion_2), int(f.criterion_3), f.baseline_mean_daily_visits, f.zone_id or "")
                for f in self.facilities
            ],
            columns=["poi_id", "crit1", "crit2", "crit3", "baseline_mean_visits", "zone_id"],
        )


def union_report(
    crit1: Iterable[str],
    crit2: Iterable[str],
    crit3: Iterable[str],
    baseline_visits: Mapping[str, float] | None = None,
    poi_zone: Mapping[str, str] | None = None,
) -> ScreeningReport:
    c1, c2, c3 = set(crit1), set(crit2), set(crit3)
    baseline_visits = baseline_visits or {}
    poi_zone = poi_zone or {}
    rows = []
    for p in sorted(c1 | c2 | c3):
        z = poi_zone.get(p)
        rows.append(
            CriticalFacility(p, p in c1, p in c2, p in c3, float(baseline_visits.get(p, float("nan"))), z, (z,) if z else ())
        )
    return ScreeningReport(rows)


def screen(
    pois: pd.DataFrame,
    zones: pd.DataFrame,
    typologies: Mapping[str, str],
    activity: pd.DataFrame,
    q: float = 0.25,
    scope: str = "region",
) -> ScreeningReport:
    """Run all three criteria and return the union report."""
    poi_zone = facility_zones(pois, zones)
    baseline = dict(zip(activity["poi_id"], activity["baseline_mean_visits"].astype(float)))
    for p in poi_zone:
        baseline.setdefault(p, 0.0)
    density = dict(zip(zones["zone_id"], zones["road_density"].astype(float)))
    c1 = criterion_hh_zones(poi_zone, typologies, baseline, q, scope)
    c2 = criterion_marginalized(poi_zone, density, baseline, q, scope)
    c3 = criterion_downtime(activity, baseline, q)
    return union_report(c1, c2, c3, baseline, poi_zone)
