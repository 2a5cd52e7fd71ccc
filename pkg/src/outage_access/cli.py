"""Command-line entry point: ``outage-access <subcommand> [--config FILE] [--key VALUE ...]``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import time
from datetime import timedelta
from pathlib import Path

from . import dtw_cluster, pipeline
from .config import ConfigError, PipelineConfig, SynthConfig

log = logging.getLogger("outage_access")

SUBCOMMANDS = ("synth",) + pipeline.STAGES + ("run", "figures")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("configuration overrides (same names as config-file keys)")
    for f in PipelineConfig.fields():
        group.add_argument(f"--{f.name}", dest=f"cfg_{f.name}", metavar="VALUE", default=None)


def _add_synth_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("generator settings")
    for f in dataclasses.fields(SynthConfig):
        group.add_argument(f"--{f.name}", dest=f"syn_{f.name}", metavar="VALUE", default=None)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None, help="worker threads for DTW kernels (default: all cores)")
    common.add_argument("--quiet", action="store_true", help="suppress progress logging")

    parser = argparse.ArgumentParser(prog="outage-access", description="Outage and food-access coupling analysis.")
    sub = parser.add_subparsers(dest="command", required=True)

    syn = sub.add_parser("synth", parents=[common], help="write a synthetic input bundle with ground truth")
    syn.add_argument("--out", required=True, help="directory for the bundle")
    _add_synth_flags(syn)

    helps = {
        "ingest": "validate inputs and write an ingest report",
        "metrics": "daily zone metrics and facility activity",
        "lagcorr": "lagged outage/access correlations",
        "cluster": "DTW k-means with silhouette selection",
        "typology": "compound typologies and disparity tests",
        "screen": "critical facility screening",
        "run": "all stages, summary.json and figures",
        "figures": "SVG figures from existing stage outputs",
    }
    for name in SUBCOMMANDS[1:]:
        p = sub.add_parser(name, parents=[common], help=helps[name])
        p.add_argument("--config", default=None, help="sectioned key = value file")
        if name == "run":
            p.add_argument("--no-figures", action="store_true", help="skip figure output")
        _add_config_flags(p)
    return parser


def _prefixed(args: argparse.Namespace, prefix: str) -> dict[str, str]:
    return {k[len(prefix):]: v for k, v in vars(args).items() if k.startswith(prefix) and v is not None}


def _synth_config(overrides: dict[str, str]) -> SynthConfig:
    types = {f.name: f.type for f in dataclasses.fields(SynthConfig)}
    values = {}
    for key, raw in overrides.items():
        kind = str(types[key])
        try:
            values[key] = int(raw) if kind == "int" else float(raw) if kind == "float" else raw
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return SynthConfig(**values)


def cmd_synth(args: argparse.Namespace) -> int:
    from .synth import generate, write_bundle

    cfg = _synth_config(_prefixed(args, "syn_"))
    t0 = time.perf_counter()
    bundle = generate(cfg)
    paths = write_bundle(bundle, args.out)
    run_cfg = PipelineConfig(
        outages="outages.csv",
        trips="trips.csv",
        pois="pois.csv",
        zones="zones.csv",
        output_dir="out",
        start_date=cfg.start_date,
        baseline_end=cfg.baseline_end,
        disruption_start=cfg.disruption_start,
        end_date=cfg.end_date,
        landfall=cfg.disruption_start + timedelta(days=cfg.landfall_offset),
    )
    (Path(args.out) / "pipeline.ini").write_text(run_cfg.to_text(), encoding="utf-8")
    log.info("synth     %.2fs  %d outage rows, %d trip rows -> %s", time.perf_counter() - t0, len(bundle.outages), len(bundle.trips), paths["outages"].parent)
    return pipeline.EXIT_OK


def cmd_pipeline(args: argparse.Namespace) -> int:
    cfg = PipelineConfig.from_file(args.config, _prefixed(args, "cfg_"))
    if args.command == "run":
        pipeline.run_pipeline(cfg, figures=not args.no_figures)
    elif args.command == "figures":
        from .figures import emit_figures

        out = Path(cfg.output_dir)
        with pipeline.staged_output(out) as tmp:
            pipeline._timed("figures", emit_figures, out, tmp / "figures", cfg)
    else:
        pipeline.run_stage(cfg, args.command)
    return pipeline.EXIT_OK


def _setup_logging(quiet: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.WARNING if quiet else logging.INFO)
    log.propagate = False


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.quiet)
    try:
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        dtw_cluster.set_threads(args.threads)
        return cmd_synth(args) if args.command == "synth" else cmd_pipeline(args)
    except pipeline.StageError as exc:
        log.error("%s", exc)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001 - configuration and setup failures
        code = pipeline.exit_code_for(exc)
        log.error("%s: %s: %s", args.command, type(exc).__name__, exc)
        return code


if __name__ == "__main__":
    sys.exit(main())
