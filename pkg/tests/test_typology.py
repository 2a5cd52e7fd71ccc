import numpy as np
import pandas as pd
import pytest
from hypothesis import given
from hypothesis import strategies as st

from outage_access import stats, typology
from outage_access.dtw_cluster import ClusterModel


def model(centroid_means, labels, zone_ids=None):
    cents = np.stack([np.full((5, 1), m) for m in centroid_means])
    zone_ids = zone_ids or tuple(f"z{i}" for i in range(len(labels)))
    return ClusterModel(len(centroid_means), cents, np.asarray(labels), 0.0, 0, 1, zone_ids=tuple(zone_ids))


def zones_frame(values: dict[str, float]) -> pd.DataFrame:
    return pd.DataFrame({"zone_id": list(values), "road_density": list(values.values()), "median_income": 1.0, "lat": 0.0, "lon": 0.0})


def test_access_cluster_with_deeper_drop_is_high():
    labels = typology.label_clusters(model([-0.6, -0.1], [0, 1, 0]), "access")
    assert labels == {"z0": "high", "z1": "low", "z2": "high"}


def test_outage_cluster_with_larger_rise_is_high():
    labels = typology.label_clusters(model([0.8, 0.05], [0, 1]), "outage")
    assert labels == {"z0": "high", "z1": "low"}


@given(st.permutations([0, 1, 2]))
def test_labels_do_not_depend_on_cluster_indices(perm):
    means = [-0.9, -0.5, -0.05]
    labels = [0, 0, 1, 1, 2, 2]
    base = typology.label_clusters(model(means, labels), "access")
    permuted_means = [means[perm.index(c)] for c in range(3)]
    permuted_labels = [perm[c] for c in labels]
    assert typology.label_clusters(model(permuted_means, permuted_labels), "access") == base


def test_widest_gap_split_for_three_clusters():
    labels = typology.label_clusters(model([-0.9, -0.8, -0.1], [0, 1, 2]), "access")
    assert labels == {"z0": "high", "z1": "high", "z2": "low"}


def test_overlay_codes_and_counts():
    ov = typology.overlay({"a": "high", "b": "low", "c": "high"}, {"a": "high", "b": "high", "c": "low"})
    assert ov.as_map() == {"a": "HH", "b": "HL", "c": "LH"}
    assert ov.counts == {"HH": 1, "HL": 1, "LH": 1, "LL": 0}
    assert sum(ov.counts.values()) == 3


def test_overlay_of_disjoint_zones_is_empty():
    ov = typology.overlay({"a": "high"}, {"b": "low"})
    assert ov.zones == [] and ov.missing == ["a", "b"]


level = st.sampled_from(["high", "low"])


@given(st.dictionaries(st.sampled_from("abcdefgh"), level), st.dictionaries(st.sampled_from("abcdefgh"), level))
def test_overlay_is_idempotent_and_counts_shared_zones(access, outage):
    a = typology.overlay(access, outage)
    b = typology.overlay(access, outage)
    assert a.as_map() == b.as_map()
    assert sum(a.counts.values()) == len(set(access) & set(outage))
    swapped = typology.overlay(outage, access)
    assert set(swapped.as_map()) == set(a.as_map())


def test_identical_covariates_give_f_zero():
    typ = {f"z{i}": t for i, t in enumerate(["HH", "HH", "HL", "HL", "LH", "LH", "LL", "LL"])}
    res = typology.disparity_test(typ, "road_density", zones_frame({z: 5.0 for z in typ}))
    assert res.anova.f_stat == 0.0 and res.anova.p_value == 1.0


def test_planted_gradient_is_significant_and_confirmed_by_permutation():
    rng = np.random.default_rng(0)
    typ, dens = {}, {}
    for g, mean in zip(["HH", "HL", "LH", "LL"], [3.0, 6.0, 9.0, 12.0]):
        for i in range(8):
            z = f"{g}{i}"
            typ[z] = g
            dens[z] = mean + rng.normal()
    res = typology.disparity_test(typ, "road_density", zones_frame(dens))
    assert res.anova.p_value < 0.001
    norm = (pd.Series(dens) - min(dens.values())) / (max(dens.values()) - min(dens.values()))
    groups = [[norm[z] for z in typ if typ[z] == g] for g in ["HH", "HL", "LH", "LL"]]
    assert stats.permutation_pvalue_anova(groups, n_perm=5000, seed=1) < 0.001
    assert list(res.summary["group"]) == ["HH", "HL", "LH", "LL"]
    assert res.summary["median"].is_monotonic_increasing


def test_singleton_group_is_a_precondition_error():
    typ = {"a": "HH", "b": "LL", "c": "LL"}
    with pytest.raises(ValueError, match="HH"):
        typology.disparity_test(typ, "road_density", zones_frame({"a": 1.0, "b": 2.0, "c": 3.0}))
