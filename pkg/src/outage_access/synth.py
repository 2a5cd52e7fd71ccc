"""Seeded generator of a coupled outage + food-mobility event with planted truth.

Zones sit on a regular grid. Each zone carries a planted outage regime
(severe or mild) and access regime (prolonged or rebound); crossing the two
gives its compound typology. Outage telemetry follows one regional shape
scaled per zone, so the regional mean intensity is an affine image of
:func:`outage_template`. Access follows two regime shapes whose zone-weighted
mixture equals :func:`access_template`. The two templates are built so that
the regional access minimum falls at landfall, the outage maximum
``planted_lag_days`` later, and the lagged correlation of outage against
access peaks (negatively) at that lag.

Facilities are planted so the three screening criteria have known answers:
a fixed number of high-traffic facilities sit in high-outage/high-disruption
zones and in low road-density zones, and a fixed number go dark for the
whole disruption period.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import numpy as np
import pandas as pd

from .config import ConfigError, SynthConfig
from .ingest import nearest_zone, write_table

__all__ = [
    "SynthConfig",
    "GroundTruth",
    "SynthBundle",
    "outage_template",
    "access_template",
    "regime_templates",
    "ground_truth",
    "generate",
    "write_bundle",
]

INTERVALS_PER_DAY = 96
OUTAGE_THRESHOLD = 0.001
DURATION_SATURATION = 0.25  # excess intensity at which a zone is out all day
CENTER = (29.76, -95.37)
CELL_DEG = 0.04
NAICS = ("445110", "445120", "445131", "445298", "722511", "722513")

# Template constants, found by a constrained search so that at zero noise the
# sweep has tau* = planted lag with p < 0.01 for lags <= 3 and p >= 0.01 after.
_PRE_OUTAGE = (0.1, 0.244)
_LANDFALL_OUTAGE = 0.842
_PRE_PEAK_OUTAGE = 0.869
_DECAY_DAYS = 1.534
_OUTAGE_FLOOR = 0.051
_KERNEL = {-2: 0.368, -1: 0.036, 0: 1.0, 1: 0.249}  # offsets around the planted lag
_COUPLING = 0.948
_OVERSHOOT = 0.232
_OVERSHOOT_DAY = 5.797  # days after landfall
_SURGE = (1.067, 1.283)
_DAY_AFTER = 0.884
_NADIR_GAP = 0.05
_PROLONGED_TROUGH = 0.2
_PROLONGED_CEILING = 0.95
_PROLONGED_TAU = 3.0


def outage_template(n_days: int, landfall: int, lag: int) -> np.ndarray:
    """Regional outage shape over the disruption days, peak value 1 at ``landfall + lag``."""
    peak = landfall + lag
    if not 0 <= landfall <= peak < n_days:
        raise ValueError("landfall and peak must fall inside the disruption period")
    x = np.full(n_days, _PRE_OUTAGE[0])
    for j, v in zip((landfall - 2, landfall - 1), _PRE_OUTAGE):
        if j >= 0:
            x[j] = v
    if lag > 0:
        x[landfall:peak] = np.linspace(_LANDFALL_OUTAGE, _PRE_PEAK_OUTAGE, lag)
    x[peak] = 1.0
    t = np.arange(1, n_days - peak)
    x[peak + 1:] = _OUTAGE_FLOOR + (1.0 - _OUTAGE_FLOOR) * np.exp(-t / _DECAY_DAYS)
    return x


def access_template(outage: np.ndarray, landfall: int, lag: int) -> np.ndarray:
    """Regional access factor (baseline 1) driven by the outage shape through a lag kernel.

    A pre-landfall surge, a collapse at landfall, a kernel-weighted
    suppression centred on ``lag`` and a late catch-up overshoot.
    """
    x = np.asarray(outage, dtype=float)
    n = x.size
    k = np.arange(n)
    weights = {lag + o: v for o, v in _KERNEL.items() if lag + o >= 0}
    total = sum(weights.values())
    conv = np.zeros(n)
    for shift, v in weights.items():
        if shift < n:
            conv[shift:] += v / total * x[: n - shift]
    y = 1.0 - _COUPLING * conv + _OVERSHOOT / (1.0 + np.exp(-(k - landfall - _OVERSHOOT_DAY)))
    for j, v in zip((landfall - 2, landfall - 1), _SURGE):
        if j >= 0:
            y[j] = v
    if landfall + 1 < n:
        y[landfall + 1] = _DAY_AFTER
    y = np.maximum(y, 2 * _NADIR_GAP)
    y[landfall] = np.delete(y, landfall).min() - _NADIR_GAP
    return y


def regime_templates(regional: np.ndarray, landfall: int, n_prolonged: int, n_rebound: int) -> tuple[np.ndarray, np.ndarray]:
    """Split the regional access factor into prolonged and rebound shapes.

    The prolonged shape stays depressed and recovers slowly; the rebound shape
    is whatever makes the zone-count-weighted mixture equal ``regional``.
    """
    y = np.asarray(regional, dtype=float)
    k = np.arange(y.size)
    start = landfall + 4
    recovery = _PROLONGED_TROUGH + (_PROLONGED_CEILING - _PROLONGED_TROUGH) * (1 - np.exp(-np.maximum(k - start, 0) / _PROLONGED_TAU))
    prolonged = np.where(k >= landfall + 2, np.minimum(y, recovery), y)
    if n_rebound == 0:
        return y.copy(), y.copy()
    if n_prolonged == 0:
        return y.copy(), y.copy()
    rebound = y + (n_prolonged / n_rebound) * (y - prolonged)
    return prolonged, rebound


@dataclass
class GroundTruth:
    seed: int
    planted_lag_days: int
    landfall_date: date
    outage_peak_date: date
    zones: dict[str, dict]
    typology_counts: dict[str, int]
    popular: set[str]
    inactive: set[str]
    criterion_1: set[str]
    criterion_2: set[str]
    criterion_3: set[str]

    @property
    def critical(self) -> set[str]:
        return self.criterion_1 | self.criterion_2 | self.criterion_3

    @property
    def counts(self) -> dict[str, int]:
        return {
            "criterion_1": len(self.criterion_1),
            "criterion_2": len(self.criterion_2),
            "criterion_3": len(self.criterion_3),
            "union": len(self.critical),
        }

    def regime(self, domain: str) -> dict[str, str]:
        key = {"outage": "outage_regime", "access": "access_regime"}[domain]
        return {z: v[key] for z, v in self.zones.items()}

    def typologies(self) -> dict[str, str]:
        return {z: v["typology"] for z, v in self.zones.items()}

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "planted_lag_days": self.planted_lag_days,
            "landfall_date": self.landfall_date.isoformat(),
            "outage_peak_date": self.outage_peak_date.isoformat(),
            "typology_counts": self.typology_counts,
            "criterion_counts": self.counts,
            "zones": {z: self.zones[z] for z in sorted(self.zones)},
            "popular": sorted(self.popular),
            "inactive": sorted(self.inactive),
            "criterion_1": sorted(self.criterion_1),
            "criterion_2": sorted(self.criterion_2),
            "criterion_3": sorted(self.criterion_3),
            "critical": sorted(self.critical),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        d = json.loads(text)
        return cls(
            seed=d["seed"],
            planted_lag_days=d["planted_lag_days"],
            landfall_date=date.fromisoformat(d["landfall_date"]),
            outage_peak_date=date.fromisoformat(d["outage_peak_date"]),
            zones=d["zones"],
            typology_counts=d["typology_counts"],
            popular=set(d["popular"]),
            inactive=set(d["inactive"]),
            criterion_1=set(d["criterion_1"]),
            criterion_2=set(d["criterion_2"]),
            criterion_3=set(d["criterion_3"]),
        )


@dataclass
class _Plan:
    zones: pd.DataFrame
    pois: pd.DataFrame
    typology: np.ndarray  # per zone
    low: np.ndarray  # per zone bool
    poi_zone: np.ndarray  # zone index per POI
    popular: np.ndarray  # bool per POI
    inactive: np.ndarray  # bool per POI
    weight: np.ndarray  # destination weight per POI
    customers: np.ndarray
    outage_amp: np.ndarray
    access_base: np.ndarray  # distinct POIs per day at baseline
    access_amp: np.ndarray


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def _spread(total: int, slots: int, rng: np.random.Generator) -> np.ndarray:
    """Split ``total`` into ``slots`` near-equal parts, extra units placed at random."""
    if slots == 0:
        if total:
            raise ConfigError(f"cannot place {total} facilities in an empty zone group")
        return np.zeros(0, dtype=int)
    out = np.full(slots, total // slots, dtype=int)
    out[rng.permutation(slots)[: total % slots]] += 1
    return out


def _project_out(v: np.ndarray, basis: list[np.ndarray]) -> np.ndarray:
    """Remove the components of ``v`` spanned by ``basis`` (least squares)."""
    if v.size <= len(basis):
        return np.zeros_like(v)
    a = np.column_stack(basis)
    coef, *_ = np.linalg.lstsq(a, v, rcond=None)
    return v - a @ coef


def _zone_grid(n: int) -> tuple[np.ndarray, np.ndarray]:
    cols = math.ceil(math.sqrt(n))
    rows = math.ceil(n / cols)
    dlon = CELL_DEG / math.cos(math.radians(CENTER[0]))
    idx = np.arange(n)
    r, c = idx // cols, idx % cols
    lat = CENTER[0] + (r - (rows - 1) / 2) * CELL_DEG
    lon = CENTER[1] + (c - (cols - 1) / 2) * dlon
    return np.round(lat, 6), np.round(lon, 6)


def _plan(cfg: SynthConfig) -> _Plan:
    rng = _stream(cfg.seed, 0)
    nz, npoi = cfg.n_zones, cfg.n_pois
    width = max(3, len(str(nz)))
    zone_ids = np.array([f"Z{i + 1:0{width}d}" for i in range(nz)], dtype=object)

    typology = np.array(sum(([t] * n for t, n in cfg.typology_counts.items()), []), dtype=object)
    typology = typology[rng.permutation(nz)]
    low = np.zeros(nz, dtype=bool)
    for t, n in cfg.low_density_counts.items():
        members = np.flatnonzero(typology == t)
        low[rng.choice(members, size=n, replace=False)] = True

    high_access = np.isin(typology, ("HH", "LH"))
    density = np.where(
        low,
        rng.uniform(2.0, 6.0, nz),
        np.where(high_access, rng.uniform(8.0, 14.0, nz), rng.uniform(12.0, 20.0, nz)),
    )
    income = rng.uniform(35_000, 120_000, nz)
    lat, lon = _zone_grid(nz)
    zones = pd.DataFrame(
        {
            "zone_id": zone_ids,
            "lat": lat,
            "lon": lon,
            "road_density": np.round(density, 3),
            "median_income": np.round(income, 0),
        }
    )

    # facility placement by zone group
    hh = typology == "HH"
    groups = [hh & low, hh & ~low, low & ~hh, ~hh & ~low]
    n_pop = cfg.n_popular
    n_hh_zones = int(hh.sum())
    if cfg.n_crit_hh and not n_hh_zones:
        raise ConfigError("criterion-1 facilities requested but no HH zones are planted")
    g1 = round(cfg.n_crit_hh * int(groups[0].sum()) / n_hh_zones) if n_hh_zones else 0
    g1 = min(g1, cfg.n_crit_low_density)
    pop_counts = [g1, cfg.n_crit_hh - g1, cfg.n_crit_low_density - g1]
    pop_counts.append(n_pop - sum(pop_counts))
    if min(pop_counts) < 0:
        raise ConfigError(f"criterion targets {cfg.n_crit_hh}/{cfg.n_crit_low_density} do not fit {n_pop} top-quartile facilities")
    in_12 = sum(pop_counts[:3])
    dark_in = cfg.n_crit_hh + cfg.n_crit_low_density - g1 + cfg.n_crit_downtime - cfg.n_critical
    dark_out = cfg.n_crit_downtime - dark_in
    if not (0 <= dark_in <= in_12 and 0 <= dark_out <= pop_counts[3]):
        raise ConfigError(
            f"union target {cfg.n_critical} is unreachable with criterion sizes "
            f"{cfg.n_crit_hh}/{cfg.n_crit_low_density}/{cfg.n_crit_downtime}"
        )
    if cfg.n_inactive_other > npoi - n_pop:
        raise ConfigError("n_inactive_other exceeds the number of non-top-quartile facilities")

    poi_zone, poi_popular = [], []
    for members, count in zip(groups, pop_counts):
        zidx = np.flatnonzero(members)
        per = _spread(count, zidx.size, rng)
        for z, c in zip(zidx, per):
            poi_zone += [z] * int(c)
            poi_popular += [True] * int(c)
    per = _spread(npoi - n_pop, nz, rng)
    for z, c in enumerate(per):
        poi_zone += [z] * int(c)
        poi_popular += [False] * int(c)
    order = rng.permutation(npoi)
    poi_zone = np.asarray(poi_zone)[order]
    popular = np.asarray(poi_popular)[order]

    in_crit_zone = hh[poi_zone] | low[poi_zone]
    inactive = np.zeros(npoi, dtype=bool)
    inactive[rng.choice(np.flatnonzero(popular & in_crit_zone), size=dark_in, replace=False)] = True
    inactive[rng.choice(np.flatnonzero(popular & ~in_crit_zone), size=dark_out, replace=False)] = True
    inactive[rng.choice(np.flatnonzero(~popular), size=cfg.n_inactive_other, replace=False)] = True

    dlat = rng.uniform(-0.35, 0.35, npoi) * CELL_DEG
    dlon = rng.uniform(-0.35, 0.35, npoi) * CELL_DEG / math.cos(math.radians(CENTER[0]))
    width_p = max(4, len(str(npoi)))
    pois = pd.DataFrame(
        {
            "poi_id": [f"P{i + 1:0{width_p}d}" for i in range(npoi)],
            "lat": np.round(lat[poi_zone] + dlat, 6),
            "lon": np.round(lon[poi_zone] + dlon, 6),
            "naics": rng.choice(np.array(NAICS, dtype=object), size=npoi),
        }
    )
    weight = np.where(popular, 3.0, 1.0) * rng.uniform(0.8, 1.2, npoi)

    customers = rng.integers(cfg.customers_min, cfg.customers_max + 1, nz)
    severe = np.isin(typology, ("HH", "HL"))
    spread = np.where(severe, cfg.severe_jitter, cfg.mild_jitter)
    outage_amp = np.where(severe, cfg.severe_peak, cfg.mild_peak) * (1.0 + spread * rng.uniform(-1, 1, nz))

    # access levels: regime means of both the baseline level and the response
    # amplitude are pinned so regional means stay exact mixtures of the templates
    u = rng.uniform(-0.2, 0.2, nz)
    v = rng.uniform(-cfg.access_jitter, cfg.access_jitter, nz)
    for members in (high_access, ~high_access):
        idx = np.flatnonzero(members)
        u[idx] = _project_out(u[idx], [np.ones(idx.size)])
        v[idx] = _project_out(v[idx], [np.ones(idx.size), u[idx]])
    access_base = cfg.distinct_per_zone_day * (1.0 + u)
    access_amp = 1.0 + v

    return _Plan(zones, pois, typology, low, poi_zone, popular, inactive, weight, customers, outage_amp, access_base, access_amp)


def ground_truth(cfg: SynthConfig) -> GroundTruth:
    """Planted answers for ``cfg``; a pure function of the configuration."""
    plan = _plan(cfg)
    zid = plan.zones["zone_id"].to_numpy()
    pid = plan.pois["poi_id"].to_numpy()
    zones = {}
    for i, z in enumerate(zid):
        t = str(plan.typology[i])
        zones[str(z)] = {
            "typology": t,
            "outage_regime": "severe" if t[0] == "H" else "mild",
            "access_regime": "prolonged" if t[1] == "H" else "rebound",
            "low_density": bool(plan.low[i]),
        }
    hh = plan.typology[plan.poi_zone] == "HH"
    low = plan.low[plan.poi_zone]
    dis = cfg.window.disruption_days()
    return GroundTruth(
        seed=cfg.seed,
        planted_lag_days=cfg.planted_lag_days,
        landfall_date=dis[cfg.landfall_offset],
        outage_peak_date=dis[cfg.landfall_offset + cfg.planted_lag_days],
        zones=zones,
        typology_counts=dict(cfg.typology_counts),
        popular=set(pid[plan.popular]),
        inactive=set(pid[plan.inactive]),
        criterion_1=set(pid[plan.popular & hh]),
        criterion_2=set(pid[plan.popular & low]),
        criterion_3=set(pid[plan.popular & plan.inactive]),
    )


@dataclass
class SynthBundle:
    outages: pd.DataFrame
    trips: pd.DataFrame
    pois: pd.DataFrame
    zones: pd.DataFrame
    truth: GroundTruth
    config: SynthConfig = field(repr=False, default=None)


def _daily_factors(cfg: SynthConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full-window outage shape and (prolonged, rebound) access factors."""
    win = cfg.window
    nb = len(win.baseline_days())
    nd = len(win.disruption_days())
    x = outage_template(nd, cfg.landfall_offset, cfg.planted_lag_days)
    y = access_template(x, cfg.landfall_offset, cfg.planted_lag_days)
    n_p = cfg.n_hh + cfg.n_lh
    prolonged, rebound = regime_templates(y, cfg.landfall_offset, n_p, cfg.n_zones - n_p)
    pad0 = np.zeros(nb)
    pad1 = np.ones(nb)
    return np.concatenate([pad0, x]), np.concatenate([pad1, prolonged]), np.concatenate([pad1, rebound])


def _outage_rows(cfg: SynthConfig, plan: _Plan, shape: np.ndarray) -> pd.DataFrame:
    n_days = shape.size
    nz = cfg.n_zones
    out = np.empty((nz, n_days * INTERVALS_PER_DAY), dtype=np.int64)
    for z in range(nz):
        rng = _stream(cfg.seed, 1, z)
        total = int(plan.customers[z])
        excess = plan.outage_amp[z] * shape
        intensity = cfg.baseline_intensity + excess
        n_q = cfg.baseline_intervals + (INTERVALS_PER_DAY - cfg.baseline_intervals) * np.minimum(1.0, excess / DURATION_SATURATION)
        e1 = rng.standard_normal(n_days)
        e2 = rng.standard_normal(n_days)
        if cfg.noise_sigma > 0:
            intensity = intensity * np.clip(1.0 + cfg.noise_sigma * e1, 0.5, 1.5)
            n_q = n_q * np.clip(1.0 + cfg.noise_sigma * e2, 0.5, 1.5)
        n_q = np.clip(np.rint(n_q), 1, INTERVALS_PER_DAY).astype(int)
        floor_q = math.ceil(OUTAGE_THRESHOLD * total)
        q_out = np.maximum(np.rint(intensity * total).astype(np.int64), floor_q)
        start = rng.integers(0, INTERVALS_PER_DAY - n_q + 1)
        below = rng.integers(0, floor_q, size=(n_days, INTERVALS_PER_DAY))
        below[rng.random((n_days, INTERVALS_PER_DAY)) < 0.5] = 0
        slot = np.arange(INTERVALS_PER_DAY)[None, :]
        qual = (slot >= start[:, None]) & (slot < (start + n_q)[:, None])
        out[z] = np.where(qual, q_out[:, None], below).ravel()
    t0 = pd.Timestamp(cfg.start_date, tz="UTC")
    stamps = pd.date_range(t0, periods=n_days * INTERVALS_PER_DAY, freq="15min")
    zid = plan.zones["zone_id"].to_numpy()
    return pd.DataFrame(
        {
            "zone_id": np.repeat(zid, stamps.size),
            "timestamp": np.tile(stamps.to_numpy(), nz),
            "customers_out": out.ravel(),
            "customers_total": np.repeat(plan.customers.astype(np.int64), stamps.size),
        }
    ).assign(timestamp=lambda d: pd.to_datetime(d["timestamp"], utc=True))


def _trip_rows(cfg: SynthConfig, plan: _Plan, prolonged: np.ndarray, rebound: np.ndarray) -> pd.DataFrame:
    n_days = prolonged.size
    nb = len(cfg.window.baseline_days())
    npoi = cfg.n_pois
    logw = np.log(plan.weight)
    logw_dark = np.where(plan.inactive, -np.inf, logw)
    high_access = np.isin(plan.typology, ("HH", "LH"))
    zi, pi, di, ci = [], [], [], []
    for z in range(cfg.n_zones):
        rng = _stream(cfg.seed, 2, z)
        shape = prolonged if high_access[z] else rebound
        a = 1.0 + plan.access_amp[z] * (shape - 1.0)
        eps = rng.standard_normal(n_days)
        if cfg.noise_sigma > 0:
            a = a * np.clip(1.0 + cfg.noise_sigma * eps, 0.5, 1.5)
        a = np.maximum(a, 0.02)
        scores = rng.gumbel(size=(n_days, npoi))
        scores[:nb] += logw
        scores[nb:] += logw_dark
        ranked = np.argsort(-scores, axis=1, kind="stable")
        n_open = np.where(np.arange(n_days) < nb, npoi, npoi - int(plan.inactive.sum()))
        distinct = np.clip(np.rint(plan.access_base[z] * a), 1, n_open).astype(int)
        volume = np.maximum(distinct, np.rint(distinct * (1.0 + (cfg.visits_per_distinct - 1.0) * a))).astype(int)
        for d in range(n_days):
            chosen = np.sort(ranked[d, : distinct[d]])
            extra = volume[d] - distinct[d]
            w = plan.weight[chosen]
            share = extra * w / w.sum()
            base = np.floor(share).astype(int)
            left = extra - int(base.sum())
            if left:
                base[np.argsort(-(share - base), kind="stable")[:left]] += 1
            zi.append(np.full(chosen.size, z))
            pi.append(chosen)
            di.append(np.full(chosen.size, d))
            ci.append(base + 1)
    days = np.array(cfg.window.days(), dtype=object)
    zid = plan.zones["zone_id"].to_numpy()
    pid = plan.pois["poi_id"].to_numpy()
    z_all = np.concatenate(zi)
    return pd.DataFrame(
        {
            "home_zone_id": zid[z_all],
            "poi_id": pid[np.concatenate(pi)],
            "date": days[np.concatenate(di)],
            "count": np.concatenate(ci).astype(np.int64),
        }
    )


def _check_planted(cfg: SynthConfig, bundle: SynthBundle) -> None:
    """Confirm the generated visits realise the planted facility sets."""
    from .screening import top_set  # local import keeps synth importable on its own

    win = cfg.window
    base_days = set(win.baseline_days())
    dis_days = set(win.disruption_days())
    t = bundle.trips
    base = t[t["date"].isin(base_days)].groupby("poi_id")["count"].sum() / len(base_days)
    base = base.reindex(bundle.pois["poi_id"], fill_value=0.0)
    dis = t[t["date"].isin(dis_days)].groupby("poi_id")["count"].sum() / len(dis_days)
    dis = dis.reindex(bundle.pois["poi_id"], fill_value=0.0)
    top = top_set(base.to_dict(), 0.75)
    if top != bundle.truth.popular:
        raise RuntimeError(f"generated visits put {len(top ^ bundle.truth.popular)} facilities on the wrong side of the top quartile")
    dark = set(base.index[(dis <= 0.1 * base) & (base > 0)])
    if dark != bundle.truth.inactive:
        raise RuntimeError("generated visits do not match the planted inactive set")
    zone_of = nearest_zone(bundle.pois["lat"].to_numpy(), bundle.pois["lon"].to_numpy(), bundle.zones)
    planted = _plan(cfg).poi_zone
    if not np.array_equal(zone_of, bundle.zones["zone_id"].to_numpy()[planted]):
        raise RuntimeError("facility coordinates do not map back to their planted zones")


def generate(cfg: SynthConfig | None = None, check: bool = True) -> SynthBundle:
    """Build the four input tables and the matching ground truth."""
    cfg = cfg or SynthConfig()
    plan = _plan(cfg)
    shape, prolonged, rebound = _daily_factors(cfg)
    if min(prolonged.min(), rebound.min()) <= 0:
        raise ConfigError("regime counts make the rebound shape non-positive")
    bundle = SynthBundle(
        outages=_outage_rows(cfg, plan, shape),
        trips=_trip_rows(cfg, plan, prolonged, rebound),
        pois=plan.pois.copy(),
        zones=plan.zones.copy(),
        truth=ground_truth(cfg),
        config=cfg,
    )
    if check:
        _check_planted(cfg, bundle)
    return bundle


def write_bundle(bundle: SynthBundle, out_dir: str | Path) -> dict[str, Path]:
    """Write ``outages.csv``, ``trips.csv``, ``pois.csv``, ``zones.csv`` and ``ground_truth.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "outages": out / "outages.csv",
        "trips": out / "trips.csv",
        "pois": out / "pois.csv",
        "zones": out / "zones.csv",
        "ground_truth": out / "ground_truth.json",
    }
    write_table(bundle.outages, paths["outages"], "outage")
    write_table(bundle.trips, paths["trips"], "trip")
    write_table(bundle.pois, paths["pois"], "poi")
    write_table(bundle.zones, paths["zones"], "zone")
    paths["ground_truth"].write_text(bundle.truth.to_json())
    return paths
