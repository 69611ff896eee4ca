"""Benchmark the pipeline at deployment scale: 231 judges x 101 ventures, 3 tracks.

The assignment stage is expected to finish within two minutes on a commodity
4-core machine and the whole run within five.
"""

import argparse
import tempfile
import time
from pathlib import Path

from judgematch.pipeline import RunConfig, run_pipeline
from judgematch.synthetic import make_dataset


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--judges", type=int, default=231)
    parser.add_argument("--ventures", type=int, default=101)
    parser.add_argument("--panel", type=int, default=12)
    parser.add_argument("--load", type=int, default=7)
    parser.add_argument("--outdir", default=None, help="keep artifacts here instead of a temp dir")
    args = parser.parse_args()

    workdir = Path(args.outdir) if args.outdir else Path(tempfile.mkdtemp(prefix="judgematch-bench-"))
    generation_started = time.perf_counter()
    paths = make_dataset(
        workdir,
        n_judges=args.judges,
        n_ventures=args.ventures,
        panel_size=args.panel,
        load_max=args.load,
        n_labels=105,
        resamples=200,
    )
    print(f"dataset generated in {time.perf_counter() - generation_started:.1f}s at {workdir}")

    started = time.perf_counter()
    artifacts = run_pipeline(RunConfig.load(paths["config"]))
    total = time.perf_counter() - started
    for entry in artifacts.timings:
        print(f"{entry['stage']:<12}{entry['seconds']:>8.3f}s")
    print(f"total       {total:>8.3f}s")
    assign_seconds = next(e["seconds"] for e in artifacts.timings if e["stage"] == "assign")
    print(f"assignment stage {'OK' if assign_seconds < 120 else 'OVER BUDGET'} "
          f"({assign_seconds:.1f}s / 120s); pipeline {'OK' if total < 300 else 'OVER BUDGET'} "
          f"({total:.1f}s / 300s)")


if __name__ == "__main__":
    main()
