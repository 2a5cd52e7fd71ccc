"""SVG figures of regional metric series and the lag-correlation profile.

Output is byte-stable across runs: a fixed hash salt, text kept as text,
and no creation date in the metadata.
"""

from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from .config import PipelineConfig  # noqa: E402
from .metrics import normalize_minmax, wide_series  # noqa: E402

log = logging.getLogger("outage_access")

_RC = {"svg.hashsalt": "outage-access", "svg.fonttype": "none", "figure.figsize": (7.0, 3.6), "font.size": 9}


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def plot_metric(long: pd.DataFrame, metric: str, cfg: PipelineConfig, path: Path) -> None:
    """Min-max normalized regional mean of one metric, with the landfall day marked."""
    days = cfg.window.days()
    wide = wide_series(long, metric).reindex(columns=days)
    if wide.empty or wide.isna().to_numpy().all():
        raise ValueError(f"nothing to plot for metric {metric!r}")
    series, _ = normalize_minmax(np.nanmean(wide.to_numpy(float), axis=0))
    x = np.arange(len(days))
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(x, series, marker="o", ms=3, lw=1.2)
        if cfg.landfall in days:
            ax.axvline(days.index(cfg.landfall), color="crimson", ls="--", lw=1, label="landfall")
            ax.legend(loc="best", frameon=False)
        ax.axvspan(days.index(cfg.window.disruption_start) - 0.5, len(days) - 0.5, color="0.92", zorder=0)
        ticks = x[::3]
        ax.set_xticks(ticks, [days[i].strftime("%m-%d") for i in ticks])
        ax.set_ylabel(f"{metric} (normalized)")
        ax.set_ylim(-0.05, 1.05)
        fig.tight_layout()
        _save(fig, path)


def plot_lag_profile(pooled: pd.DataFrame, cfg: PipelineConfig, path: Path) -> None:
    """Bars of r by lag for each metric pair; hatched bars are significant."""
    sel = pooled[(pooled["mode"] == cfg.lag_mode) & (pooled["direction"] == "outage_leads")]
    if sel.empty:
        raise ValueError("nothing to plot: no lag-correlation rows")
    pairs = list(dict.fromkeys(zip(sel["outage_metric"], sel["access_metric"])))
    lags = sorted(sel["lag"].unique())
    width = 0.8 / len(pairs)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for i, (om, am) in enumerate(pairs):
            rows = sel[(sel["outage_metric"] == om) & (sel["access_metric"] == am)].set_index("lag").reindex(lags)
            sig = rows["significant"].fillna(0).astype(bool).to_numpy()
            pos = np.asarray(lags) + (i - (len(pairs) - 1) / 2) * width
            bars = ax.bar(pos, rows["r"].to_numpy(float), width, label=f"{om} x {am}")
            for bar, s in zip(bars, sig):
                bar.set_alpha(1.0 if s else 0.35)
        ax.axhline(0, color="k", lw=0.6)
        ax.set_xticks(lags)
        ax.set_xlabel("lag (days, outage leading)")
        ax.set_ylabel("Pearson r")
        ax.legend(fontsize=6, ncol=2, frameon=False)
        fig.tight_layout()
        _save(fig, path)


def emit_figures(src: Path, dst: Path, cfg: PipelineConfig) -> list[Path]:
    """Write one SVG per configured metric plus the lag profile."""
    src, dst = Path(src), Path(dst)
    metrics_path = src / "metrics.csv"
    if not metrics_path.exists():
        raise FileNotFoundError(f"missing stage input: {metrics_path}")
    long = pd.read_csv(metrics_path, dtype={"zone_id": str})
    if long.empty:
        raise ValueError("nothing to plot: metrics.csv is empty")
    long["date"] = pd.to_datetime(long["date"]).dt.date
    dst.mkdir(parents=True, exist_ok=True)
    written = []
    for metric in cfg.metric_list("outage") + cfg.metric_list("access"):
        path = dst / f"{metric}.svg"
        plot_metric(long, metric, cfg, path)
        written.append(path)
    pooled_path = src / "lagcorr_pooled.csv"
    if pooled_path.exists():
        path = dst / "lagcorr.svg"
        plot_lag_profile(pd.read_csv(pooled_path), cfg, path)
        written.append(path)
    else:
        log.warning("no lag-correlation output found; lag profile figure skipped")
    return written
