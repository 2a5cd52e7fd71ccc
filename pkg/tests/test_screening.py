import pandas as pd
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import quantile_linear
from outage_access import screening

values = st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=50)


def test_linear_interpolation_quantile():
    assert screening.percentile_rank([1, 2, 3, 4], 0.75) == 3.25
    assert screening.percentile_rank([7], 0.3) == 7


@given(values, st.floats(0, 1))
def test_quantile_matches_hand_written_definition(x, q):
    assert screening.percentile_rank(x, q) == pytest.approx(quantile_linear(x, q), rel=1e-12, abs=1e-9)


@given(values, st.floats(0, 1), st.floats(0, 1), st.randoms(use_true_random=False))
def test_quantile_monotone_and_order_free(x, q1, q2, rnd):
    lo, hi = sorted((q1, q2))
    assert screening.percentile_rank(x, lo) <= screening.percentile_rank(x, hi)
    shuffled = list(x)
    rnd.shuffle(shuffled)
    assert screening.percentile_rank(shuffled, q1) == screening.percentile_rank(x, q1)


def test_all_equal_values_fill_both_extremes():
    v = {"a": 3.0, "b": 3.0, "c": 3.0}
    assert screening.top_set(v) == screening.bottom_set(v) == set(v)


def test_hh_criterion():
    poi_zone = {"p1": "z1", "p2": "z1", "p3": "z2", "p4": "z2"}
    visits = {"p1": 100.0, "p2": 1.0, "p3": 90.0, "p4": 2.0}
    got = screening.criterion_hh_zones(poi_zone, {"z1": "HH", "z2": "LL"}, visits)
    assert got == {"p1"}


def test_marginalized_criterion_ignores_dense_zones():
    poi_zone = {"p1": "z1", "p2": "z2", "p3": "z3", "p4": "z4"}
    density = {"z1": 1.0, "z2": 5.0, "z3": 6.0, "z4": 7.0}
    visits = {"p1": 90.0, "p2": 80.0, "p3": 1.0, "p4": 2.0}
    assert screening.criterion_marginalized(poi_zone, density, visits) == {"p1"}
    visits["p1"] = 0.5
    assert screening.criterion_marginalized(poi_zone, density, visits) == set()


def test_downtime_criterion():
    act = pd.DataFrame(
        {
            "poi_id": ["a", "b", "c", "d"],
            "baseline_mean_visits": [20.0, 20.0, 1.0, 1.0],
            "inactive": pd.array([True, False, True, pd.NA], dtype="boolean"),
        }
    )
    # a: 95% drop and popular; b: 75% drop; c: inactive but not popular
    assert screening.criterion_downtime(act) == {"a"}


def test_union_flags():
    rep = screening.union_report({"A", "B"}, {"B", "C"}, {"C"})
    flags = {f.poi_id: (f.criterion_1, f.criterion_2, f.criterion_3) for f in rep.facilities}
    assert flags == {"A": (True, False, False), "B": (True, True, False), "C": (False, True, True)}
    assert screening.union_report([], [], []).facilities == []


ids = st.sets(st.sampled_from([f"p{i}" for i in range(20)]))


@given(ids, ids, ids)
def test_union_size_bounds(a, b, c):
    n = len(screening.union_report(a, b, c).facilities)
    assert max(len(a), len(b), len(c)) <= n <= len(a) + len(b) + len(c)
    disjoint = not (a & b or a & c or b & c)
    assert (n == len(a) + len(b) + len(c)) == disjoint


def test_within_zone_scope_restricts_the_ranking():
    poi_zone = {"p1": "z1", "p2": "z1", "p3": "z1", "p4": "z1", "p5": "z2", "p6": "z2"}
    visits = {"p1": 1.0, "p2": 2.0, "p3": 3.0, "p4": 4.0, "p5": 100.0, "p6": 200.0}
    typ = {"z1": "HH", "z2": "LL"}
    assert screening.criterion_hh_zones(poi_zone, typ, visits, scope="region") == set()
    assert screening.criterion_hh_zones(poi_zone, typ, visits, scope="within_zones") == {"p4"}


def test_every_reported_facility_rechecks_from_raw(default_run):
    run = default_run
    rep = pd.read_csv(run.out / "critical_facilities.csv", dtype={"poi_id": str, "zone_id": str})
    act = pd.read_csv(run.out / "facility_activity.csv", dtype={"poi_id": str})
    zones = pd.read_csv(run.bundle / "zones.csv", dtype={"zone_id": str})
    typ = pd.read_csv(run.out / "typology.csv", dtype={"zone_id": str}).set_index("zone_id")["typology"]
    base = act.set_index("poi_id")["baseline_mean_visits"]
    cut = quantile_linear(base.tolist(), 0.75)
    low = set(zones.loc[zones["road_density"] <= quantile_linear(zones["road_density"].tolist(), 0.25), "zone_id"])
    inactive = set(act.loc[act["inactive"] == 1, "poi_id"])
    for row in rep.itertuples(index=False):
        popular = base[row.poi_id] >= cut
        assert popular
        c1 = typ[row.zone_id] == "HH"
        c2 = row.zone_id in low
        c3 = row.poi_id in inactive
        assert (bool(row.crit1), bool(row.crit2), bool(row.crit3)) == (c1, c2, c3)
