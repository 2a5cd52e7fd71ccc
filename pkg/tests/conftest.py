"""Session fixtures: synthetic bundles run once through the CLI and shared by tests."""

from __future__ import annotations

import json
import os
import subprocess
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import pytest

from outage_access.config import PipelineConfig
from outage_access.synth import GroundTruth

ACCEPTANCE_LINES: list[str] = []


def cli(*args: str, threads: int | None = None, env_threads: int = 4) -> subprocess.CompletedProcess:
    """Run the CLI in a fresh interpreter so thread settings take effect."""
    env = dict(os.environ, NUMBA_NUM_THREADS=str(env_threads))
    cmd = [sys.executable, "-m", "outage_access.cli", *args]
    if threads is not None:
        cmd += ["--threads", str(threads)]
    return subprocess.run(cmd, capture_output=True, text=True, env=env)


@dataclass
class BundleRun:
    bundle: Path
    out: Path
    cfg: PipelineConfig
    truth: GroundTruth
    seconds: float

    @property
    def summary(self) -> dict:
        return json.loads((self.out / "summary.json").read_text())


def _build(root: Path, *synth_args: str) -> BundleRun:
    bundle = root / "bundle"
    proc = cli("synth", "--out", str(bundle), "--quiet", *synth_args)
    assert proc.returncode == 0, proc.stderr
    out = root / "out"
    t0 = time.perf_counter()
    proc = cli("run", "--config", str(bundle / "pipeline.ini"), "--output_dir", str(out), "--quiet", threads=1)
    seconds = time.perf_counter() - t0
    assert proc.returncode == 0, proc.stderr
    cfg = PipelineConfig.from_file(bundle / "pipeline.ini", {"output_dir": str(out)})
    truth = GroundTruth.from_json((bundle / "ground_truth.json").read_text())
    return BundleRun(bundle, out, cfg, truth, seconds)


@pytest.fixture(scope="session")
def default_run(tmp_path_factory) -> BundleRun:
    """Default bundle (seed 1, noise 0.05) after a full ``run``."""
    return _build(tmp_path_factory.mktemp("default"))


@pytest.fixture(scope="session")
def zero_noise_run(tmp_path_factory) -> BundleRun:
    return _build(tmp_path_factory.mktemp("zero_noise"), "--noise_sigma", "0")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
