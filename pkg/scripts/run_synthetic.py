"""Generate a synthetic competition dataset and run the full pipeline on it.

Usage: python scripts/run_synthetic.py [outdir] [--judges N] [--ventures N]
"""

import argparse
import json
from pathlib import Path

from judgematch.pipeline import RunConfig, run_pipeline
from judgematch.synthetic import make_dataset


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("outdir", nargs="?", default="synthetic_run")
    parser.add_argument("--judges", type=int, default=24)
    parser.add_argument("--ventures", type=int, default=9)
    parser.add_argument("--panel", type=int, default=4)
    parser.add_argument("--load", type=int, default=3)
    parser.add_argument("--seed", type=int, default=20250401)
    args = parser.parse_args()

    paths = make_dataset(
        args.outdir,
        n_judges=args.judges,
        n_ventures=args.ventures,
        panel_size=args.panel,
        load_max=args.load,
        seed=args.seed,
    )
    artifacts = run_pipeline(RunConfig.load(paths["config"]))
    for entry in artifacts.timings:
        cached = " (cached)" if entry["cache_hit"] else ""
        print(f"{entry['stage']:<12}{entry['seconds']:>8.3f}s{cached}")
    report = json.loads(artifacts.files["assignment_report"].read_text(encoding="utf-8"))
    for track in report["tracks"]:
        print(
            f"{track['track']}: min={track['min_quality']:.3f} "
            f"mean={track['mean_quality']:.3f} max={track['max_quality']:.3f}"
        )
    print(f"artifacts: {Path(artifacts.output_dir).resolve()}")


if __name__ == "__main__":
    main()
