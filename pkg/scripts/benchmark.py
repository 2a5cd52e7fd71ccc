"""Wall-clock timing of synth and a full run, plus a byte-level rerun check.

    NUMBA_NUM_THREADS=4 python3 scripts/benchmark.py --threads 1 4
"""

from __future__ import annotations

import argparse
import hashlib
import tempfile
import time
from pathlib import Path

from outage_access.cli import main as cli_main


def digest(root: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(str(p.relative_to(root)).encode())
            h.update(p.read_bytes())
    return h.hexdigest()[:16]


def timed(args: list[str]) -> float:
    t0 = time.perf_counter()
    if cli_main(args + ["--quiet"]) != 0:
        raise SystemExit(f"command failed: {args}")
    return time.perf_counter() - t0


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--threads", type=int, nargs="+", default=[1])
    ap.add_argument("--repeats", type=int, default=2)
    args = ap.parse_args()

    work = Path(tempfile.mkdtemp(prefix="oa-bench-"))
    bundle = work / "bundle"
    print(f"synth  {timed(['synth', '--out', str(bundle)]):6.2f}s")
    for n in args.threads:
        for i in range(args.repeats):
            out = work / f"out-t{n}-{i}"
            secs = timed(["run", "--config", str(bundle / "pipeline.ini"), "--output_dir", str(out), "--threads", str(n)])
            print(f"run    {secs:6.2f}s  threads={n} repeat={i} digest={digest(out)}")


if __name__ == "__main__":
    main()
