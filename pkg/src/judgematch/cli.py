"""Command-line entry points: ingest, similarity, train, assign, evaluate, run, serve, export."""

from __future__ import annotations

import argparse
import logging
import sys

from .pipeline import PipelineError, RunConfig, export_artifact, run_pipeline


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="judgematch", description=__doc__)
    parser.add_argument("--config", required=True, help="run config YAML")
    parser.add_argument("--seed-override", type=int, default=None, help="override run.seed")
    parser.add_argument("--log-level", default="INFO")
    sub = parser.add_subparsers(dest="command", required=True)

    for verb, stages in (
        ("ingest", ("ingest",)),
        ("similarity", ("ingest", "similarity")),
        ("train", ("ingest", "similarity", "train")),
        ("assign", ("ingest", "similarity", "train", "assign")),
        ("evaluate", ("evaluate",)),
        ("run", None),
    ):
        cmd = sub.add_parser(verb, help=f"run pipeline through the {verb} stage" if stages else "run all stages")
        cmd.set_defaults(stages=stages)

    serve_cmd = sub.add_parser("serve", help="serve the review API over a completed run")
    serve_cmd.add_argument("--host", default=None)
    serve_cmd.add_argument("--port", type=int, default=None)

    export_cmd = sub.add_parser("export", help="re-export a pipeline artifact")
    export_cmd.add_argument("name", choices=["assignment", "grid", "evaluation", "provenance"])
    export_cmd.add_argument("--format", choices=["csv", "json"], required=True)
    export_cmd.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper(), logging.INFO))
    log = logging.getLogger("judgematch")

    config = RunConfig.load(args.config)
    if args.seed_override is not None:
        config.raw.setdefault("run", {})["seed"] = args.seed_override

    if args.command == "serve":
        from .service import serve

        serve(config, host=args.host, port=args.port)
        return 0

    if args.command == "export":
        dest = export_artifact(config.output_dir, args.name, args.format, args.out)
        log.info("exported %s to %s", args.name, dest)
        return 0

    stages = getattr(args, "stages", None)
    try:
        artifacts = run_pipeline(config, stages=stages or ("ingest", "similarity", "train", "assign", "evaluate"))
    except PipelineError as exc:
        log.error("%s", exc)
        return 1
    for entry in artifacts.timings:
        log.info(
            "stage %-10s %7.3fs%s",
            entry["stage"],
            entry["seconds"],
            " (cached)" if entry["cache_hit"] else "",
        )
    log.info("artifacts in %s (config %s)", artifacts.output_dir, artifacts.config_hash[:12])
    return 0


if __name__ == "__main__":
    sys.exit(main())
