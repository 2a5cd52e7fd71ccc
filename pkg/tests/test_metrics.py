from datetime import date, datetime, timedelta, timezone

import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import great_circle_arc
from outage_access import metrics
from outage_access.config import StudyWindow
from outage_access.metrics import EARTH_RADIUS_KM

SMALL_WINDOW = StudyWindow(date(2024, 7, 1), date(2024, 7, 3), date(2024, 7, 4), date(2024, 7, 6))

fractions = st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=1, max_size=96)
lat = st.floats(-90, 90, allow_nan=False)
lon = st.floats(-180, 180, allow_nan=False)


# ---------------------------------------------------------------- scalar metrics


def test_intensity_ignores_sub_threshold_intervals():
    value, n = metrics.outage_intensity([0.0005, 0.2, 0.0009, 0.4])
    assert (value, n) == (pytest.approx(0.3), 2)


def test_threshold_is_inclusive():
    assert metrics.outage_intensity([0.001]) == (0.001, 1)
    assert metrics.outage_duration([0.001, 0.000999]) == 0.25


@given(fractions)
def test_duration_is_a_quarter_hour_per_qualifying_interval(p):
    assert metrics.outage_duration(p) == 0.25 * sum(v >= 0.001 for v in p)


@given(fractions, st.randoms(use_true_random=False))
def test_intensity_is_order_invariant_and_bounded(p, rnd):
    value, n = metrics.outage_intensity(p)
    shuffled = list(p)
    rnd.shuffle(shuffled)
    assert metrics.outage_intensity(shuffled)[0] == pytest.approx(value, abs=1e-15)
    kept = [v for v in p if v >= 0.001]
    if kept:
        assert min(kept) - 1e-15 <= value <= max(kept) + 1e-15
    else:
        assert (value, n) == (0.0, 0)


def test_redundancy_skips_zero_count_rows():
    assert metrics.redundancy(["A", "B", "C"], [1, 0, 2]) == 2


def test_frequency_divides_volume_by_distinct_pois():
    assert metrics.frequency(["A", "A", "B"], [3, 1, 4]) == (4.0, False)


def test_proximity_per_trip_variant_divides_by_volume():
    one_km = 1.0 / great_circle_arc(EARTH_RADIUS_KM, 1.0)
    coords = {"A": (0.0, one_km), "B": (0.0, 3 * one_km)}
    value, _ = metrics.proximity(["A", "B"], [2, 1], coords, 0.0, 0.0, per_trip=True)
    assert value == pytest.approx(5.0 / 3.0, rel=1e-12)


def test_proximity_unknown_poi_is_an_error():
    with pytest.raises(KeyError, match="Z"):
        metrics.proximity(["Z"], [1], {}, 0.0, 0.0)


def test_haversine_rejects_out_of_range_coordinates():
    with pytest.raises(ValueError):
        metrics.haversine(91.0, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        metrics.haversine(0.0, 0.0, 0.0, 181.0)


def test_haversine_uses_the_equatorial_radius():
    assert metrics.haversine(0.0, 0.0, 0.0, 180.0) == pytest.approx(math.pi * 6378.137, rel=1e-12)


@settings(max_examples=300)
@given(lat, lon, lat, lon, lat, lon)
def test_haversine_is_a_metric(a1, o1, a2, o2, a3, o3):
    ab = metrics.haversine(a1, o1, a2, o2)
    ba = metrics.haversine(a2, o2, a1, o1)
    assert ab >= 0
    assert ab == pytest.approx(ba, abs=1e-9)
    assert metrics.haversine(a1, o1, a1, o1) == 0.0
    ac = metrics.haversine(a1, o1, a3, o3)
    bc = metrics.haversine(a2, o2, a3, o3)
    assert ac <= ab + bc + 1e-9


def test_shortest_distance_matches_exhaustive_scan():
    rng = np.random.default_rng(3)
    plat = 29.5 + rng.uniform(0, 0.5, size=40)
    plon = -95.6 + rng.uniform(0, 0.5, size=40)
    for zlat, zlon in rng.uniform([29.5, -95.6], [30.0, -95.1], size=(10, 2)):
        brute = min(metrics.haversine(zlat, zlon, a, b) for a, b in zip(plat, plon))
        assert metrics.shortest_distance(zlat, zlon, plat, plon) == pytest.approx(brute, rel=1e-12)


def test_shortest_distance_of_nothing_is_undefined():
    with pytest.raises(ValueError):
        metrics.shortest_distance(0.0, 0.0, [], [])


# ---------------------------------------------------------------- series transforms


def test_zero_baseline_facility_is_unclassified():
    act = metrics.facility_inactivity("p", {date(2024, 7, 5): 3.0}, SMALL_WINDOW)
    assert act.baseline_mean_daily_visits == 0.0
    assert act.inactive is None


def test_absent_baseline_days_count_as_zero():
    act = metrics.facility_inactivity("p", {date(2024, 7, 1): 9.0}, SMALL_WINDOW)
    assert act.baseline_mean_daily_visits == 3.0
    assert act.inactive is True


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=40))
def test_moving_average_stays_within_local_range(x):
    out = metrics.moving_average(x, 3)
    for i, v in enumerate(out):
        seg = x[max(0, i - 1):i + 2]
        assert min(seg) <= v <= max(seg)


def test_moving_average_rejects_even_windows():
    with pytest.raises(ValueError):
        metrics.moving_average([1, 2, 3], 2)


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=40))
def test_minmax_hits_both_ends(x):
    out, flat = metrics.normalize_minmax(x)
    if flat:
        assert np.all(out == 0)
    else:
        assert out.min() == 0.0 and out.max() == 1.0
        assert np.all((out >= 0) & (out <= 1))


# ---------------------------------------------------------------- table builders


def _outage_rows(zone: str, day: date, fractions_: list[float], total: int = 1000) -> list[dict]:
    start = datetime(day.year, day.month, day.day, tzinfo=timezone.utc)
    return [
        {"zone_id": zone, "timestamp": pd.Timestamp(start + timedelta(minutes=15 * i)), "customers_out": round(f * total), "customers_total": total}
        for i, f in enumerate(fractions_)
    ]


def test_daily_outage_table_matches_scalar_definitions():
    d0 = SMALL_WINDOW.start_date
    rows = _outage_rows("Z1", d0, [0.1, 0.2, 0.3] + [0.0] * 93) + _outage_rows("Z2", d0, [0.0005] * 96)
    table = metrics.daily_outage_metrics(pd.DataFrame(rows), SMALL_WINDOW, ["Z1", "Z2"])
    get = table.set_index(["zone_id", "date", "metric"])
    assert get.loc[("Z1", d0, "intensity"), "value"] == pytest.approx(0.2)
    assert get.loc[("Z1", d0, "duration"), "value"] == 0.75
    assert get.loc[("Z2", d0, "intensity"), "value"] == 0.0
    assert get.loc[("Z2", d0, "intensity"), "flag"] == metrics.NO_QUALIFYING
    # days without any records are zero and flagged
    assert len(table) == 2 * 2 * len(SMALL_WINDOW.days())
    assert get.loc[("Z1", SMALL_WINDOW.end_date, "duration"), "flag"] == metrics.NO_QUALIFYING


def test_daily_access_table_matches_scalar_definitions():
    one_km = 1.0 / great_circle_arc(EARTH_RADIUS_KM, 1.0)
    zones = pd.DataFrame({"zone_id": ["Z1"], "lat": [0.0], "lon": [0.0], "road_density": [1.0], "median_income": [1.0]})
    pois = pd.DataFrame({"poi_id": ["A", "B"], "lat": [0.0, 0.0], "lon": [one_km, 3 * one_km], "naics": ["445110", "445110"]})
    d0 = SMALL_WINDOW.start_date
    trips = pd.DataFrame({"home_zone_id": ["Z1", "Z1"], "poi_id": ["A", "B"], "date": [d0, d0], "count": [2, 1]})
    table = metrics.daily_access_metrics(trips, pois, zones, SMALL_WINDOW).set_index(["zone_id", "date", "metric"])
    assert table.loc[("Z1", d0, "redundancy"), "value"] == 2
    assert table.loc[("Z1", d0, "frequency"), "value"] == 1.5
    assert table.loc[("Z1", d0, "proximity"), "value"] == pytest.approx(2.5, rel=1e-12)
    assert table.loc[("Z1", d0, "shortest_distance"), "value"] == pytest.approx(1.0, rel=1e-12)
    d1 = d0 + timedelta(days=1)
    assert table.loc[("Z1", d1, "frequency"), "flag"] == metrics.NO_TRIPS
    assert table.loc[("Z1", d1, "redundancy"), "flag"] == ""


def test_facility_table_agrees_with_scalar_inactivity():
    rng = np.random.default_rng(0)
    days = SMALL_WINDOW.days()
    rows = [(f"P{i}", d, int(rng.integers(0, 6))) for i in range(30) for d in days if rng.random() < 0.7]
    trips = pd.DataFrame(rows, columns=["poi_id", "date", "count"]).assign(home_zone_id="Z1")
    pois = pd.DataFrame({"poi_id": [f"P{i}" for i in range(31)]})
    table = metrics.facility_activity_table(trips, pois, SMALL_WINDOW).set_index("poi_id")
    for pid in pois["poi_id"]:
        visits = {d: c for p, d, c in rows if p == pid}
        ref = metrics.facility_inactivity(pid, visits, SMALL_WINDOW)
        got = table.loc[pid]
        assert got["baseline_mean_visits"] == pytest.approx(ref.baseline_mean_daily_visits)
        if ref.inactive is None:
            assert pd.isna(got["inactive"]) and got["flag"] == "zero_baseline"
        else:
            assert bool(got["inactive"]) == ref.inactive
            assert got["inactive_days"] == len(ref.inactive_days)
