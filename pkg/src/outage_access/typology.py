"""Compound power/access typologies and covariate disparity tests."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping

import numpy as np
import pandas as pd

from .dtw_cluster import ClusterModel
from .metrics import normalize_minmax
from .stats import AnovaResult, one_way_anova

log = logging.getLogger(__name__)

HIGH, LOW = "high", "low"
TYPOLOGIES = ("HH", "HL", "LH", "LL")  # outage level first, access disruption second


@dataclass(frozen=True)
class CompoundTypology:
    zone_id: str
    outage_level: str
    access_level: str

    @property
    def typology(self) -> str:
        return self.outage_level[0].upper() + self.access_level[0].upper()


def centroid_severity(centroids: np.ndarray, domain: str, dim: int | None = None) -> np.ndarray:
    """Per-cluster severity score; larger means more disrupted.

    Access: negated mean percent change over all days and metrics.
    Outage: mean change of the intensity dimension (``dim`` defaults to 0).
    """
    c = np.asarray(centroids, dtype=float)
    if c.ndim == 2:
        c = c[:, :, None]
    if domain == "access":
        return -c.mean(axis=(1, 2))
    if domain == "outage":
        return c[:, :, 0 if dim is None else dim].mean(axis=1)
    raise ValueError(f"domain must be 'access' or 'outage', got {domain!r}")


def label_clusters(model: ClusterModel, domain: str, dim: int | None = None) -> dict[str, str]:
    """Zone -> high/low disruption level from centroid statistics.

    With two clusters the more severe one is high. With more, clusters
    are split at the widest gap in sorted severity, upper side high.
    """
    sev = centroid_severity(model.centroids, domain, dim)
    order = np.argsort(sev, kind="mergesort")
    if len(sev) == 1:
        high = set()
    else:
        gaps = np.diff(sev[order])
        cut = int(np.argmax(gaps)) + 1
        high = set(order[cut:].tolist())
    return {z: (HIGH if int(c) in high else LOW) for z, c in zip(model.zone_ids, model.labels)}


@dataclass
class Overlay:
    zones: list[CompoundTypology]
    counts: dict[str, int]
    missing: list[str]

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(t.zone_id, t.outage_level, t.access_level, t.typology) for t in self.zones],
            columns=["zone_id", "outage_level", "access_level", "typology"],
        )

    def as_map(self) -> dict[str, str]:
        return {t.zone_id: t.typology for t in self.zones}


def overlay(access_labels: Mapping[str, str], outage_labels: Mapping[str, str]) -> Overlay:
    """Cross the two label maps; zones lacking either label are reported, not typed."""
    both = sorted(set(access_labels) & set(outage_labels))
    missing = sorted(set(access_labels) ^ set(outage_labels))
    if missing:
        log.warning("%d zone(s) lack a label in one domain and are excluded", len(missing))
    if not both:
        log.warning("access and outage label sets are disjoint; overlay is empty")
    zones = [CompoundTypology(z, outage_labels[z], access_labels[z]) for z in both]
    counts = {t: 0 for t in TYPOLOGIES}
    for zt in zones:
        counts[zt.typology] += 1
    return Overlay(zones, counts, missing)


@dataclass
class DisparityResult:
    covariate: str
    anova: AnovaResult
    summary: pd.DataFrame  # group, n, median, q1, q3 of the normalized covariate


def disparity_test(typologies: Mapping[str, str], covariate: str, zones: pd.DataFrame) -> DisparityResult:
    """One-way ANOVA of a min-max normalized zone covariate across typologies."""
    if covariate not in ("road_density", "median_income"):
        raise ValueError(f"unsupported covariate {covariate!r}")
    z = zones.set_index("zone_id")
    scaled, _ = normalize_minmax(z[covariate].to_numpy(float))
    norm = pd.Series(scaled, index=z.index)
    groups: dict[str, list[float]] = {}
    for zone_id, t in sorted(typologies.items()):
        if zone_id not in norm.index:
            raise KeyError(f"zone {zone_id!r} missing from zone table")
        groups.setdefault(t, []).append(float(norm[zone_id]))
    labels = [t for t in TYPOLOGIES if t in groups] + sorted(set(groups) - set(TYPOLOGIES))
    for t in labels:
        if len(groups[t]) < 2:
            raise ValueError(f"typology {t} has {len(groups[t])} zone(s); need >= 2 for ANOVA")
    if len(labels) < 2:
        raise ValueError("need at least 2 typology groups")
    values = [groups[t] for t in labels]
    spread = np.concatenate(values)
    if np.all(spread == spread[0]):
        res = AnovaResult(tuple(labels), tuple(len(v) for v in values), 0.0, len(labels) - 1, len(spread) - len(labels), 1.0)
    else:
        res = one_way_anova(values, labels)
    rows = []
    for t, v in zip(labels, values):
        q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75])
        rows.append({"group": t, "n": len(v), "median": med, "q1": q1, "q3": q3})
    return DisparityResult(covariate, res, pd.DataFrame(rows))
