"""Stage orchestration: each stage reads declared files and writes its own.

Stages run in the order ingest, metrics, lagcorr, cluster, typology, screen.
A stage reads inputs named in the config plus files written by earlier stages,
so any stage can be rerun on its own against an output directory. Results are
staged in a sibling temporary directory and moved into place only when the
whole invocation succeeds.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import shutil
import tempfile
import time
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Callable, Iterator

import numpy as np
import pandas as pd

from . import dtw_cluster, ingest, metrics, screening, stats, typology
from .config import ConfigError, PipelineConfig

log = logging.getLogger("outage_access")

STAGES = ("ingest", "metrics", "lagcorr", "cluster", "typology", "screen")

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_NUMERICAL = 0, 1, 2, 3

OUTPUTS = {
    "ingest": ("ingest_report.json",),
    "metrics": ("metrics.csv", "facility_activity.csv", "static_distance.csv"),
    "lagcorr": ("lagcorr.csv", "lagcorr_pooled.csv"),
    "cluster": ("clusters.csv", "silhouette.csv", "centroids.csv"),
    "typology": ("typology.csv", "disparity.csv"),
    "screen": ("critical_facilities.csv",),
}
AGGREGATED_TRIPS = "trips_aggregated.csv"


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        self.exit_code = exit_code_for(cause)
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (dtw_cluster.NumericalError, metrics.ZeroBaselineError, stats.UndefinedCorrelationError, FloatingPointError)):
        return EXIT_NUMERICAL
    if isinstance(exc, (FileNotFoundError, PermissionError, IsADirectoryError, NotADirectoryError)):
        return EXIT_IO
    if isinstance(exc, (ValueError, KeyError, ConfigError)):
        return EXIT_VALIDATION
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_NUMERICAL


# ---------------------------------------------------------------- file helpers


def _write_csv(df: pd.DataFrame, path: Path) -> None:
    out = df.copy()
    for col in out.columns:
        if out[col].dtype == object and len(out) and isinstance(out[col].iloc[0], date):
            out[col] = [d.isoformat() for d in out[col]]
    out.to_csv(path, index=False, lineterminator="\n")


def _read_csv(path: Path, dates: tuple[str, ...] = ()) -> pd.DataFrame:
    if not path.exists():
        raise FileNotFoundError(f"missing stage input: {path}")
    df = pd.read_csv(path, dtype={"zone_id": str, "poi_id": str}, keep_default_na=False, na_values=[""])
    for col in dates:
        df[col] = pd.to_datetime(df[col]).dt.date
    return df


def _write_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _finite(x: float):
    return None if x is None or not math.isfinite(x) else float(x)


# ---------------------------------------------------------------- inputs


@dataclass
class Inputs:
    zones: pd.DataFrame
    pois: pd.DataFrame
    outages: pd.DataFrame | None
    trips: pd.DataFrame | None
    report: dict


def _load(path: str, schema: str, cfg: PipelineConfig, report: dict, **kw) -> pd.DataFrame:
    res = ingest.load_table(path, schema, strict=cfg.strict, **kw)
    report[schema] = {
        "file": Path(path).name,
        "sha256": _sha256(path),
        "rows": int(res.n_rows),
        "rejected": len(res.rejects),
        "first_rejects": [str(e) for e in res.rejects[:10]],
    }
    if res.rejects:
        log.warning("%s: %d row(s) rejected", path, len(res.rejects))
    return res.table


def load_inputs(cfg: PipelineConfig, stage_dir: Path, need_outages: bool = True, need_trips: bool = True) -> Inputs:
    report: dict = {}
    zones = _load(cfg.zones, "zone", cfg, report)
    pois = _load(cfg.pois, "poi", cfg, report)
    zone_ids = zones["zone_id"].tolist()
    outages = _load(cfg.outages, "outage", cfg, report, zone_ids=zone_ids) if need_outages else None
    trips = None
    if need_trips:
        trip_path = stage_dir / AGGREGATED_TRIPS if cfg.pings else Path(cfg.trips)
        trips = _load(trip_path, "trip", cfg, report, window=cfg.window, zone_ids=zone_ids, poi_ids=pois["poi_id"].tolist())
    return Inputs(zones, pois, outages, trips, report)


# ---------------------------------------------------------------- stages


def stage_ingest(cfg: PipelineConfig, src: Path, dst: Path) -> dict:
    report: dict = {}
    zones = _load(cfg.zones, "zone", cfg, report)
    pois = _load(cfg.pois, "poi", cfg, report)
    zone_ids = zones["zone_id"].tolist()
    _load(cfg.outages, "outage", cfg, report, zone_ids=zone_ids)
    homes_info = None
    if cfg.pings:
        pings = _load(cfg.pings, "ping", cfg, report)
        visits = _load(cfg.visits, "visit", cfg, report, poi_ids=pois["poi_id"].tolist())
        win = cfg.window
        observation = {
            "baseline": (win.start_date, win.baseline_end),
            "window": (win.start_date, win.end_date),
            "all": None,
        }[cfg.home_observation]
        homes = ingest.assign_home_zones(pings, zones, (cfg.night_start, cfg.night_end), cfg.local_timezone, observation)
        agg = ingest.aggregate_trips(visits, homes.homes, cfg.local_timezone)
        trips = agg.trips[agg.trips["date"].isin(set(win.days()))]
        ingest.write_table(trips, dst / AGGREGATED_TRIPS, "trip")
        homes_info = {
            "devices": homes.n_devices,
            "excluded_devices": homes.n_excluded,
            "dropped_visit_events": agg.n_dropped_events,
            "trip_rows": int(len(trips)),
        }
    else:
        _load(cfg.trips, "trip", cfg, report, window=cfg.window, zone_ids=zone_ids, poi_ids=pois["poi_id"].tolist())
    out = {"tables": report, "home_assignment": homes_info}
    _write_json(out, dst / "ingest_report.json")
    return {"rows": {k: v["rows"] for k, v in report.items()}}


def stage_metrics(cfg: PipelineConfig, src: Path, dst: Path) -> dict:
    inp = load_inputs(cfg, src)
    win = cfg.window
    om = metrics.daily_outage_metrics(inp.outages, win, inp.zones["zone_id"].tolist(), cfg.outage_threshold)
    am = metrics.daily_access_metrics(inp.trips, inp.pois, inp.zones, win, cfg.per_trip_proximity)
    long = pd.concat([om, am], ignore_index=True).sort_values(["zone_id", "date", "metric"], kind="mergesort")
    _write_csv(long, dst / "metrics.csv")
    act = metrics.facility_activity_table(inp.trips, inp.pois, win, cfg.inactivity_drop)
    act = act.assign(inactive=act["inactive"].map({True: 1, False: 0}).astype("Int64"))
    _write_csv(act, dst / "facility_activity.csv")
    static = metrics.static_shortest_distance(inp.zones, inp.pois)
    _write_csv(static.rename_axis("zone_id").reset_index(), dst / "static_distance.csv")
    return {"zones": int(inp.zones.shape[0]), "facilities": int(inp.pois.shape[0]), "inactive": int(act["inactive"].fillna(0).sum())}


def _metric_frame(src: Path) -> pd.DataFrame:
    return _read_csv(src / "metrics.csv", dates=("date",))


def regional_series(long: pd.DataFrame, metric: str, days: list[date]) -> np.ndarray:
    """All-zone mean of one metric per day."""
    wide = metrics.wide_series(long, metric).reindex(columns=days)
    if wide.isna().to_numpy().any():
        raise ValueError(f"metric {metric!r} has gaps on the requested days")
    return wide.to_numpy(float).mean(axis=0)


def stage_lagcorr(cfg: PipelineConfig, src: Path, dst: Path) -> dict:
    long = _metric_frame(src)
    days = cfg.window.disruption_days()
    zone_rows, pooled_rows, summary = [], [], {}
    for om in cfg.metric_list("outage"):
        xw = metrics.wide_series(long, om).reindex(columns=days)
        for am in cfg.metric_list("access"):
            yw = metrics.wide_series(long, am).reindex(columns=days).reindex(xw.index)
            per_lag: dict[int, list[float]] = {}
            for z in xw.index:
                tab = stats.lagged_correlation(xw.loc[z].to_numpy(float), yw.loc[z].to_numpy(float), cfg.max_lag, cfg.lag_alpha, om, am, on_degenerate="nan")
                for row in tab.rows:
                    zone_rows.append((z, om, am, row.lag, row.r, row.p_value, row.n, int(row.significant)))
                    per_lag.setdefault(row.lag, []).append(row.r)
            x = regional_series(long, om, days)
            y = regional_series(long, am, days)
            tables = {
                ("pooled", "outage_leads"): stats.lagged_correlation(x, y, cfg.max_lag, cfg.lag_alpha, om, am),
                ("pooled", "access_leads"): stats.lagged_correlation(y, x, cfg.max_lag, cfg.lag_alpha, om, am),
            }
            mean_rows = []
            for lag in range(cfg.max_lag + 1):
                vals = np.array([r for r in per_lag[lag] if math.isfinite(r)])
                n = len(days) - lag
                r = float(vals.mean()) if vals.size else math.nan
                p = stats.pearson_p_value(r, n) if math.isfinite(r) else math.nan
                mean_rows.append(stats.LagRow(lag, r, p, n, bool(p < cfg.lag_alpha)))
            tables[("zone_mean", "outage_leads")] = stats.LagCorrelationTable(om, am, cfg.lag_alpha, mean_rows)
            for (mode, direction), tab in tables.items():
                for row in tab.rows:
                    pooled_rows.append((mode, direction, om, am, row.lag, row.r, row.p_value, row.n, int(row.significant)))
            chosen = tables[(cfg.lag_mode, "outage_leads")]
            summary[f"{om}:{am}"] = {
                "tau_star": chosen.tau_star,
                "r_at_tau_star": _finite(chosen.r_at(chosen.tau_star)),
                "significant_lags": [r.lag for r in chosen.rows if r.significant],
                "reversed_tau_star": tables[("pooled", "access_leads")].tau_star,
            }
    cols = ["outage_metric", "access_metric", "lag", "r", "p", "n", "significant"]
    _write_csv(pd.DataFrame(zone_rows, columns=["zone_id"] + cols), dst / "lagcorr.csv")
    _write_csv(pd.DataFrame(pooled_rows, columns=["mode", "direction"] + cols), dst / "lagcorr_pooled.csv")
    stars = [v["tau_star"] for v in summary.values()]
    lag_star = min(set(stars), key=lambda t: (-stars.count(t), t)) if stars else None
    return {"mode": cfg.lag_mode, "lag_star": lag_star, "pairs": summary}


def cluster_input(long: pd.DataFrame, metric_names: list[str], cfg: PipelineConfig) -> tuple[dtw_cluster.SeriesMatrix, list[str]]:
    """Percent change vs baseline, smoothed, restricted to the disruption days.

    Zones with a zero baseline in any metric are left out and returned
    separately.
    """
    win = cfg.window
    days = win.days()
    is_base = np.array([d <= win.baseline_end for d in days])
    is_dis = ~is_base
    frames = [metrics.wide_series(long, m).reindex(columns=days) for m in metric_names]
    zone_ids = list(frames[0].index)
    kept, dropped, blocks = [], [], []
    for z in zone_ids:
        dims = []
        try:
            for f in frames:
                v = f.loc[z].to_numpy(float)
                if cfg.smooth_after_pct:
                    s = metrics.moving_average(metrics.pct_change_vs_baseline(v, is_base), cfg.smoothing_window)
                else:
                    s = metrics.pct_change_vs_baseline(metrics.moving_average(v, cfg.smoothing_window), is_base)
                dims.append(s[is_dis])
        except metrics.ZeroBaselineError:
            dropped.append(z)
            continue
        kept.append(z)
        blocks.append(np.stack(dims, axis=1))
    if dropped:
        log.warning("%d zone(s) with a zero baseline left out of clustering: %s", len(dropped), ", ".join(dropped[:5]))
    if not kept:
        raise ValueError("no zone has a usable baseline for clustering")
    data = np.stack(blocks)
    return dtw_cluster.SeriesMatrix(tuple(kept), data, tuple(metric_names)), dropped


def _canonical(model: dtw_cluster.ClusterModel) -> tuple[np.ndarray, np.ndarray]:
    """Relabel clusters in order of first appearance so ids do not depend on seeding order."""
    order, seen = [], set()
    for c in model.labels:
        if int(c) not in seen:
            seen.add(int(c))
            order.append(int(c))
    remap = {old: new for new, old in enumerate(order)}
    return np.array([remap[int(c)] for c in model.labels]), model.centroids[order]


def stage_cluster(cfg: PipelineConfig, src: Path, dst: Path) -> dict:
    long = _metric_frame(src)
    c_rows, s_rows, m_rows, summary = [], [], [], {}
    for domain in ("access", "outage"):
        names = cfg.metric_list(domain)
        sm, dropped = cluster_input(long, names, cfg)
        k_range = [k for k in cfg.k_range if k <= len(sm)]
        if not k_range:
            raise ValueError(f"{domain}: fewer zones ({len(sm)}) than the smallest k")
        sel = dtw_cluster.select_k(sm, k_range, seed=cfg.seed, band=cfg.band, max_iter=cfg.kmeans_max_iter, tol=cfg.kmeans_tol)
        labels, cents = _canonical(sel.best)
        for z, c in zip(sm.zone_ids, labels):
            c_rows.append((domain, z, int(c)))
        for k, s in sel.scores.items():
            s_rows.append((domain, k, s))
        for c in range(cents.shape[0]):
            for d in range(cents.shape[1]):
                for j, name in enumerate(names):
                    m_rows.append((domain, c, d, name, float(cents[c, d, j])))
        summary[domain] = {
            "k_star": sel.k_star,
            "silhouette": {str(k): _finite(s) for k, s in sel.scores.items()},
            "cluster_sizes": np.bincount(labels).tolist(),
            "excluded_zones": dropped,
        }
    _write_csv(pd.DataFrame(c_rows, columns=["domain", "zone_id", "cluster"]), dst / "clusters.csv")
    _write_csv(pd.DataFrame(s_rows, columns=["domain", "k", "score"]), dst / "silhouette.csv")
    _write_csv(pd.DataFrame(m_rows, columns=["domain", "cluster", "day_index", "dim", "value"]), dst / "centroids.csv")
    return summary


def _model_from_files(clusters: pd.DataFrame, centroids: pd.DataFrame, domain: str) -> dtw_cluster.ClusterModel:
    cl = clusters[clusters["domain"] == domain].sort_values("zone_id", kind="mergesort")
    ce = centroids[centroids["domain"] == domain]
    if cl.empty or ce.empty:
        raise ValueError(f"no {domain} clustering found in stage outputs")
    dims = list(dict.fromkeys(ce["dim"]))
    k = int(ce["cluster"].max()) + 1
    t = int(ce["day_index"].max()) + 1
    arr = np.zeros((k, t, len(dims)))
    j = ce["dim"].map({d: i for i, d in enumerate(dims)}).to_numpy()
    arr[ce["cluster"].to_numpy(), ce["day_index"].to_numpy(), j] = ce["value"].to_numpy(float)
    return dtw_cluster.ClusterModel(
        k=k, centroids=arr, labels=cl["cluster"].to_numpy(), inertia=math.nan, seed=-1, iterations_run=0, zone_ids=tuple(cl["zone_id"])
    )


def stage_typology(cfg: PipelineConfig, src: Path, dst: Path) -> dict:
    clusters = _read_csv(src / "clusters.csv")
    cents = _read_csv(src / "centroids.csv")
    zones = ingest.load_table(cfg.zones, "zone", strict=cfg.strict).table
    access = typology.label_clusters(_model_from_files(clusters, cents, "access"), "access")
    # intensity is the first outage dimension by construction of the metric list
    outage = typology.label_clusters(_model_from_files(clusters, cents, "outage"), "outage", 0)
    ov = typology.overlay(access, outage)
    _write_csv(ov.frame(), dst / "typology.csv")
    rows, tests = [], {}
    tmap = ov.as_map()
    for cov in ("road_density", "median_income"):
        sizes = pd.Series(tmap).value_counts()
        usable = {z: t for z, t in tmap.items() if sizes[t] >= 2}
        if len(usable) < len(tmap):
            log.warning("%s: typology groups with fewer than 2 zones left out of the ANOVA", cov)
        if len(set(usable.values())) < 2:
            log.warning("%s: fewer than 2 testable typology groups; ANOVA skipped", cov)
            tests[cov] = {"F": None, "p": None, "significant": None}
            continue
        res = typology.disparity_test(usable, cov, zones)
        for g in res.summary.itertuples(index=False):
            rows.append((cov, g.group, g.n, g.median, g.q1, g.q3, res.anova.f_stat, res.anova.p_value))
        tests[cov] = {"F": _finite(res.anova.f_stat), "p": res.anova.p_value, "significant": bool(res.anova.p_value < cfg.anova_alpha)}
    _write_csv(pd.DataFrame(rows, columns=["covariate", "group", "n", "median", "q1", "q3", "F", "p"]), dst / "disparity.csv")
    return {"counts": ov.counts, "excluded_zones": ov.missing, "disparity": tests}


def stage_screen(cfg: PipelineConfig, src: Path, dst: Path) -> dict:
    zones = ingest.load_table(cfg.zones, "zone", strict=cfg.strict).table
    pois = ingest.load_table(cfg.pois, "poi", strict=cfg.strict).table
    typ = _read_csv(src / "typology.csv")
    act = _read_csv(src / "facility_activity.csv")
    act["inactive"] = act["inactive"].map({1: True, 0: False}).astype("boolean")
    report = screening.screen(pois, zones, dict(zip(typ["zone_id"], typ["typology"])), act, cfg.percentile, cfg.percentile_scope)
    _write_csv(report.frame(), dst / "critical_facilities.csv")
    return report.counts


STAGE_FUNCS: dict[str, Callable[[PipelineConfig, Path, Path], dict]] = {
    "ingest": stage_ingest,
    "metrics": stage_metrics,
    "lagcorr": stage_lagcorr,
    "cluster": stage_cluster,
    "typology": stage_typology,
    "screen": stage_screen,
}


# ---------------------------------------------------------------- orchestration


@contextmanager
def staged_output(output_dir: Path) -> Iterator[Path]:
    """Yield a scratch directory whose files replace those in ``output_dir`` on success."""
    output_dir = Path(output_dir)
    output_dir.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{output_dir.name}.", dir=output_dir.parent))
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    output_dir.mkdir(parents=True, exist_ok=True)
    for item in sorted(tmp.rglob("*")):
        rel = item.relative_to(tmp)
        target = output_dir / rel
        if item.is_dir():
            target.mkdir(parents=True, exist_ok=True)
        else:
            target.parent.mkdir(parents=True, exist_ok=True)
            item.replace(target)
    shutil.rmtree(tmp, ignore_errors=True)


def _timed(name: str, fn, *args):
    t0 = time.perf_counter()
    try:
        result = fn(*args)
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - every failure is reported with its stage
        raise StageError(name, exc) from exc
    log.info("%-9s %.2fs", name, time.perf_counter() - t0)
    return result


def run_stage(cfg: PipelineConfig, name: str) -> dict:
    """Run one stage against the files already in ``cfg.output_dir``."""
    if name not in STAGE_FUNCS:
        raise ValueError(f"unknown stage {name!r}")
    out = Path(cfg.output_dir)
    with staged_output(out) as tmp:
        return _timed(name, STAGE_FUNCS[name], cfg, out, tmp)


def build_summary(results: dict) -> dict:
    lag = results["lagcorr"]
    return {
        "lag_star": lag["lag_star"],
        "lag_mode": lag["mode"],
        "lag_pairs": lag["pairs"],
        "clusters": results["cluster"],
        "typology_counts": results["typology"]["counts"],
        "disparity": results["typology"]["disparity"],
        "criterion_counts": {k: v for k, v in results["screen"].items() if k != "union"},
        "critical_union": results["screen"]["union"],
        "inputs": results["ingest"]["rows"],
    }


def run_pipeline(cfg: PipelineConfig, figures: bool = True) -> dict:
    """All stages in order, then ``summary.json`` and (optionally) figures."""
    from . import figures as fig

    out = Path(cfg.output_dir)
    results: dict = {}
    with staged_output(out) as tmp:
        for name in STAGES:
            results[name] = _timed(name, STAGE_FUNCS[name], cfg, tmp, tmp)
        summary = build_summary(results)
        _write_json(summary, tmp / "summary.json")
        if figures:
            _timed("figures", fig.emit_figures, tmp, tmp / "figures", cfg)
    return summary
