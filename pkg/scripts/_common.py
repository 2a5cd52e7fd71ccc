"""Shared helpers for the experiment scripts."""

from __future__ import annotations

import tempfile
from pathlib import Path

from outage_access import pipeline
from outage_access.cli import main as cli_main
from outage_access.config import PipelineConfig, SynthConfig
from outage_access.synth import GroundTruth


def synth_bundle(synth: SynthConfig, bundle_dir: Path) -> GroundTruth:
    """Write a bundle through the CLI so scripts exercise the same path users do."""
    args = ["synth", "--out", str(bundle_dir), "--quiet"]
    for name, value in vars(synth).items():
        args += [f"--{name}", str(value)]
    if cli_main(args) != 0:
        raise SystemExit("synth failed")
    return GroundTruth.from_json((bundle_dir / "ground_truth.json").read_text())


def prepare(synth: SynthConfig, workdir: Path | None = None, stages=("ingest", "metrics"), **overrides) -> tuple[PipelineConfig, GroundTruth]:
    """Write a bundle, run ``stages`` on it and return the run config with the ground truth."""
    workdir = Path(workdir or tempfile.mkdtemp(prefix="oa-"))
    truth = synth_bundle(synth, workdir / "bundle")
    cfg = PipelineConfig.from_file(workdir / "bundle" / "pipeline.ini", {"output_dir": str(workdir / "out"), **overrides})
    for stage in stages:
        pipeline.run_stage(cfg, stage)
    return cfg, truth
