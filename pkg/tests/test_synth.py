import time
from datetime import timedelta

import numpy as np
import pandas as pd
import pytest

from outage_access import ingest, synth
from outage_access.config import ConfigError, SynthConfig
from outage_access.pipeline import regional_series


@pytest.fixture(scope="module")
def bundle():
    t0 = time.perf_counter()
    b = synth.generate(SynthConfig())
    b.seconds = time.perf_counter() - t0
    return b


def test_generation_is_fast(bundle):
    assert bundle.seconds < 30


def test_same_seed_same_tables(bundle):
    again = synth.generate(SynthConfig(), check=False)
    for name in ("outages", "trips", "pois", "zones"):
        pd.testing.assert_frame_equal(getattr(bundle, name), getattr(again, name))


def test_other_seed_changes_the_noise():
    a = synth.generate(SynthConfig(seed=2), check=False)
    b = synth.generate(SynthConfig(seed=3), check=False)
    assert not a.outages["customers_out"].equals(b.outages["customers_out"])


def test_ground_truth_matches_the_planted_targets(bundle):
    truth = bundle.truth
    assert truth.planted_lag_days == 2
    assert truth.typology_counts == {"HH": 10, "HL": 14, "LH": 70, "LL": 46}
    assert truth.counts == {"criterion_1": 92, "criterion_2": 131, "criterion_3": 139, "union": 294}
    assert truth.outage_peak_date - truth.landfall_date == timedelta(days=2)
    assert synth.GroundTruth.from_json(truth.to_json()) == truth


def test_written_bundle_passes_strict_ingest(bundle, tmp_path):
    paths = synth.write_bundle(bundle, tmp_path)
    cfg = bundle.config
    zones = ingest.load_table(paths["zones"], "zone", strict=True)
    pois = ingest.load_table(paths["pois"], "poi", strict=True)
    ingest.load_table(paths["outages"], "outage", window=cfg.window, zone_ids=zones.table["zone_id"], strict=True)
    trips = ingest.load_table(
        paths["trips"], "trip", window=cfg.window, zone_ids=zones.table["zone_id"], poi_ids=pois.table["poi_id"], strict=True
    )
    assert trips.rejects == [] and len(zones.table) == 140 and len(pois.table) == 3000


@pytest.mark.parametrize("lag", [0, 1, 2, 4])
def test_templates_put_the_access_trough_lag_days_before_the_outage_peak(lag):
    x = synth.outage_template(15, 2, lag)
    y = synth.access_template(x, 2, lag)
    assert int(np.argmax(x)) - int(np.argmin(y)) == lag


def test_noise_free_bundle_realises_the_planted_offset(zero_noise_run):
    long = pd.read_csv(zero_noise_run.out / "metrics.csv", dtype={"zone_id": str}, parse_dates=["date"])
    long["date"] = long["date"].dt.date
    days = zero_noise_run.cfg.window.disruption_days()
    intensity = regional_series(long, "intensity", days)
    for m in ("redundancy", "frequency"):
        access = regional_series(long, m, days)
        assert int(np.argmax(intensity)) - int(np.argmin(access)) == zero_noise_run.truth.planted_lag_days


@pytest.mark.parametrize(
    "kwargs,match",
    [
        ({"n_hh": 11}, "sum to"),
        ({"noise_sigma": -1.0}, "noise_sigma"),
        ({"planted_lag_days": 20}, "planted lag"),
        ({"low_hh": 11, "low_lh": 19}, "exceed"),
        ({"customers_min": 0}, "customer range"),
    ],
)
def test_config_validation(kwargs, match):
    with pytest.raises(ConfigError, match=match):
        SynthConfig(**kwargs)
