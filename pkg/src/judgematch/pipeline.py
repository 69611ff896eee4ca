"""End-to-end run orchestration: ingest, similarity, train, assign, evaluate, export."""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import __version__
from . import assignment as asg
from . import corpus as corpus_mod
from . import evaluation as eval_mod
from . import lexical
from .embeddings import fetch_embeddings, load_embeddings
from .ensemble import EnsembleModel, cross_validate_prune, quality_from_similarity
from .llm import ScoreCache
from .roster import LearnerResources, LearnerSpec, ScoreEngine, default_roster, feature_matrix_for_pairs, grid_predictions

STAGES = ("ingest", "similarity", "train", "assign", "evaluate")


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: str):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class RunConfig:
    raw: dict
    base_dir: Path

    @staticmethod
    def load(path) -> "RunConfig":
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
        return RunConfig(raw=raw, base_dir=path.parent)

    def path(self, *keys) -> Path | None:
        node = self.raw
        for key in keys:
            if not isinstance(node, dict) or key not in node:
                return None
            node = node[key]
        return self.base_dir / node if node else None

    def section(self, name: str) -> dict:
        value = self.raw.get(name)
        return value if isinstance(value, dict) else {}

    @property
    def output_dir(self) -> Path:
        return self.base_dir / self.section("run").get("output_dir", "artifacts")

    @property
    def seed(self) -> int:
        return int(self.section("run").get("seed", 0))

    def roster_specs(self, model_ids) -> list[LearnerSpec]:
        roster = self.raw.get("roster", "default")
        if roster == "default":
            specs = default_roster(sorted(model_ids))
        else:
            specs = [LearnerSpec.from_dict(entry) for entry in roster]
        llm_cfg = self.section("llm")
        if llm_cfg.get("enabled"):
            for shots in llm_cfg.get("shots", [0]):
                specs.append(LearnerSpec(f"llm_{shots}shot", "llm", shots=int(shots)))
        return specs

    def config_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.raw, sort_keys=True, separators=(",", ":")).encode("utf-8")
        ).hexdigest()


@dataclass
class RunArtifacts:
    output_dir: Path
    config_hash: str
    files: dict[str, Path] = field(default_factory=dict)
    timings: list[dict] = field(default_factory=list)

    def register(self, name: str, path: Path) -> Path:
        self.files[name] = path
        return path


def _hash_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _hash_inputs(parts: list) -> str:
    digest = hashlib.sha256()
    for part in parts:
        digest.update(json.dumps(part, sort_keys=True, default=str).encode("utf-8"))
        digest.update(b"\x00")
    return digest.hexdigest()


class _StageCache:
    """Content-hash keyed stage skipping: a stage reruns only when its inputs change."""

    def __init__(self, output_dir: Path):
        self.path = output_dir / ".cache.json"
        self.index = {}
        if self.path.exists():
            self.index = json.loads(self.path.read_text(encoding="utf-8"))

    def fresh(self, stage: str, key: str, outputs: list[Path]) -> bool:
        return self.index.get(stage) == key and all(p.exists() for p in outputs)

    def update(self, stage: str, key: str) -> None:
        self.index[stage] = key
        self.path.write_text(json.dumps(self.index, indent=2, sort_keys=True), encoding="utf-8")


def _stamp(payload: dict, config_hash: str) -> dict:
    payload["config_hash"] = config_hash
    payload["engine_version"] = __version__
    return payload


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_corpus_context(config: RunConfig) -> dict:
    """Ingest the corpus inputs: entities, composed documents, provenance."""
    corpus_cfg_path = config.path("corpus", "config")
    if corpus_cfg_path is None:
        raise FileNotFoundError("corpus.config path missing from run config")
    corpus_cfg = corpus_mod.load_corpus_config(corpus_cfg_path)

    judges_rows = corpus_mod.read_csv(config.path("corpus", "judges_csv"))
    ventures_rows = corpus_mod.read_csv(config.path("corpus", "ventures_csv"))
    judges = corpus_mod.ingest(judges_rows, corpus_cfg.judge_schema, list(corpus_cfg.tracks))
    ventures = corpus_mod.ingest(ventures_rows, corpus_cfg.venture_schema, list(corpus_cfg.tracks))
    corpus_mod.attach_coi(judges, corpus_cfg.coi_pairs)

    supplements_path = config.path("corpus", "supplements_csv")
    supplements = corpus_mod.load_supplements(supplements_path) if supplements_path else {}
    documents, provenance = corpus_mod.build_documents(
        judges, ventures, corpus_cfg.judge_schema, corpus_cfg.venture_schema, supplements
    )
    provenance.dropped_columns = {
        "judge": corpus_mod.dropped_columns(list(judges_rows[0].keys()) if judges_rows else [], corpus_cfg.judge_schema),
        "venture": corpus_mod.dropped_columns(
            list(ventures_rows[0].keys()) if ventures_rows else [], corpus_cfg.venture_schema
        ),
    }
    return {
        "corpus_cfg": corpus_cfg,
        "judges": judges,
        "ventures": ventures,
        "documents": documents,
        "provenance": provenance,
    }


def load_resources(config: RunConfig, context: dict) -> LearnerResources:
    """Attach the learner-facing inputs (background corpus, embeddings, LLM cache)."""
    background = None
    bg_path = config.path("lexical", "background_jsonl")
    if bg_path:
        background = lexical.load_background_jsonl(bg_path)
    bg_dir = config.path("lexical", "background_dir")
    if background is None and bg_dir:
        background = lexical.load_background_dir(bg_dir)

    embeddings = {}
    embedding_background = {}
    for model_id, entry in config.section("embeddings").items():
        if entry.get("file"):
            embeddings[model_id] = load_embeddings(config.base_dir / entry["file"])
        elif entry.get("provider"):
            texts = {doc_id: doc.text for doc_id, doc in context["documents"].items()}
            embeddings[model_id] = fetch_embeddings(entry["provider"], texts)
        else:
            raise ValueError(f"embeddings entry for {model_id!r} needs a 'file' or 'provider'")
        if entry.get("background_tokens"):
            embedding_background[model_id] = lexical.load_background_tokens_jsonl(
                config.base_dir / entry["background_tokens"]
            )

    llm_scores = None
    llm_cfg = config.section("llm")
    if llm_cfg.get("enabled") and llm_cfg.get("cache"):
        llm_scores = ScoreCache.load(config.base_dir / llm_cfg["cache"])

    return LearnerResources(
        documents=context["documents"],
        background=background,
        embeddings=embeddings,
        embedding_background=embedding_background,
        llm_scores=llm_scores,
    )


def run_pipeline(config: RunConfig, stages=STAGES) -> RunArtifacts:
    """Execute the pipeline stages in dependency order with content-hash caching."""
    output_dir = config.output_dir
    output_dir.mkdir(parents=True, exist_ok=True)
    config_hash = config.config_hash()
    artifacts = RunArtifacts(output_dir=output_dir, config_hash=config_hash)
    cache = _StageCache(output_dir)

    input_hashes = {}
    for keys in (
        ("corpus", "judges_csv"),
        ("corpus", "ventures_csv"),
        ("corpus", "labels_csv"),
        ("corpus", "supplements_csv"),
        ("corpus", "config"),
        ("lexical", "background_jsonl"),
        ("evaluation", "scores_csv"),
    ):
        path = config.path(*keys)
        if path and path.exists():
            input_hashes["/".join(keys)] = _hash_file(path)
    for model_id, entry in config.section("embeddings").items():
        if entry.get("provider"):
            input_hashes[f"embeddings/{model_id}"] = f"provider:{entry['provider']}"
        for label, name in (("embeddings", entry.get("file")), ("embeddings_bg", entry.get("background_tokens"))):
            if not name:
                continue
            path = config.base_dir / name
            # a vanished file is a similarity-stage failure, not a hashing crash
            input_hashes[f"{label}/{model_id}"] = _hash_file(path) if path.exists() else f"missing:{name}"

    ingest_inputs = {
        k: v
        for k, v in input_hashes.items()
        if k in ("corpus/judges_csv", "corpus/ventures_csv", "corpus/supplements_csv", "corpus/config")
    }

    context = None
    resources = None
    engine = None
    feature_cache: dict = {}

    def ensure_context():
        nonlocal context
        if context is None:
            context = load_corpus_context(config)
        return context

    def ensure_resources():
        nonlocal resources
        if resources is None:
            resources = load_resources(config, ensure_context())
        return resources, context

    def ensure_engine():
        nonlocal engine
        if engine is None:
            engine = ScoreEngine(ensure_resources()[0])
        return engine

    def labeled_feature_matrix():
        if "matrix" not in feature_cache:
            labels_path = config.path("corpus", "labels_csv")
            if labels_path is None:
                raise FileNotFoundError("corpus.labels_csv missing from run config")
            labels = corpus_mod.load_labels(labels_path)
            res, _ = ensure_resources()
            specs = config.roster_specs(res.embeddings.keys())
            matrix = feature_matrix_for_pairs(
                ensure_engine(), specs, [(l.judge_id, l.venture_id) for l in labels]
            )
            feature_cache["matrix"] = matrix
            feature_cache["labels"] = labels
        return feature_cache["matrix"], feature_cache["labels"]

    # -- ingest ---------------------------------------------------------------
    provenance_path = output_dir / "provenance.json"
    documents_path = output_dir / "documents.json"
    stage_key = _hash_inputs([config_hash, __version__, ingest_inputs])
    if "ingest" in stages:
        started = time.perf_counter()
        if cache.fresh("ingest", stage_key, [provenance_path, documents_path]):
            artifacts.timings.append({"stage": "ingest", "seconds": 0.0, "cache_hit": True})
        else:
            try:
                ctx = ensure_context()
                docs_payload = {
                    doc_id: {
                        "role": d.role,
                        "text": d.text,
                        "word_count": d.word_count,
                        "track_ids": list(d.track_ids),
                        "tokenizer_id": d.tokenizer_id,
                    }
                    for doc_id, d in sorted(ctx["documents"].items())
                }
                _write_json(documents_path, _stamp({"documents": docs_payload}, config_hash))
                provenance_path.write_text(ctx["provenance"].to_json() + "\n", encoding="utf-8")
                cache.update("ingest", stage_key)
            except Exception as exc:
                raise PipelineError("ingest", str(exc)) from exc
            artifacts.timings.append(
                {"stage": "ingest", "seconds": round(time.perf_counter() - started, 3), "cache_hit": False}
            )
    artifacts.register("provenance", provenance_path)
    artifacts.register("documents", documents_path)

    # -- similarity (feature matrix over labeled pairs) -----------------------
    features_path = output_dir / "features.csv"
    sim_key = _hash_inputs([config_hash, __version__, input_hashes])
    if "similarity" in stages:
        started = time.perf_counter()
        if cache.fresh("similarity", sim_key, [features_path]):
            artifacts.timings.append({"stage": "similarity", "seconds": 0.0, "cache_hit": True})
        else:
            try:
                matrix, _labels = labeled_feature_matrix()
                features_path.write_text(matrix.to_csv(), encoding="utf-8")
                cache.update("similarity", sim_key)
            except Exception as exc:
                raise PipelineError("similarity", str(exc)) from exc
            artifacts.timings.append(
                {"stage": "similarity", "seconds": round(time.perf_counter() - started, 3), "cache_hit": False}
            )
    artifacts.register("features", features_path)

    # -- train ----------------------------------------------------------------
    model_path = output_dir / "ensemble.json"
    train_key = _hash_inputs([sim_key, config.section("ensemble")])
    if "train" in stages:
        started = time.perf_counter()
        if cache.fresh("train", train_key, [model_path]):
            artifacts.timings.append({"stage": "train", "seconds": 0.0, "cache_hit": True})
        else:
            try:
                matrix, labels = labeled_feature_matrix()
                label_map = {(l.judge_id, l.venture_id): l.quality for l in labels}
                ens_cfg = config.section("ensemble")
                model = cross_validate_prune(
                    matrix,
                    label_map,
                    folds=int(ens_cfg.get("folds", 5)),
                    threshold=float(ens_cfg.get("threshold", 0.01)),
                    seed=int(ens_cfg.get("seed", config.seed)),
                )
                model_path.write_text(model.to_json() + "\n", encoding="utf-8")
                cache.update("train", train_key)
            except Exception as exc:
                raise PipelineError("train", str(exc)) from exc
            artifacts.timings.append(
                {"stage": "train", "seconds": round(time.perf_counter() - started, 3), "cache_hit": False}
            )
    artifacts.register("ensemble", model_path)

    # -- assign ---------------------------------------------------------------
    grid_path = output_dir / "similarity_grid.csv"
    assignment_csv_path = output_dir / "assignment.csv"
    assignment_report_path = output_dir / "assignment_report.json"
    assign_key = _hash_inputs([train_key, config.section("constraints")])
    if "assign" in stages:
        started = time.perf_counter()
        outputs = [grid_path, assignment_csv_path, assignment_report_path]
        if cache.fresh("assign", assign_key, outputs):
            artifacts.timings.append({"stage": "assign", "seconds": 0.0, "cache_hit": True})
        else:
            try:
                res, ctx = ensure_resources()
                model = EnsembleModel.from_json(model_path.read_text(encoding="utf-8"))
                specs = config.roster_specs(res.embeddings.keys())
                result = assign_all_tracks(config, res, ctx, ensure_engine(), specs, model)
                grid_path.write_text(result["grid_csv"], encoding="utf-8")
                assignment_csv_path.write_text(result["assignment_csv"], encoding="utf-8")
                _write_json(assignment_report_path, _stamp(result["report"], config_hash))
                cache.update("assign", assign_key)
            except Exception as exc:
                if isinstance(exc, asg.InfeasibleAssignmentError):
                    _write_json(
                        output_dir / "infeasibility_certificate.json",
                        _stamp(dict(exc.certificate), config_hash),
                    )
                raise PipelineError("assign", str(exc)) from exc
            artifacts.timings.append(
                {"stage": "assign", "seconds": round(time.perf_counter() - started, 3), "cache_hit": False}
            )
    artifacts.register("grid", grid_path)
    artifacts.register("assignment", assignment_csv_path)
    artifacts.register("assignment_report", assignment_report_path)

    # -- evaluate ---------------------------------------------------------------
    eval_cfg = config.section("evaluation")
    if "evaluate" in stages and eval_cfg.get("scores_csv"):
        eval_path = output_dir / "evaluation_report.json"
        eval_key = _hash_inputs([config_hash, __version__, input_hashes.get("evaluation/scores_csv"), eval_cfg])
        started = time.perf_counter()
        if cache.fresh("evaluate", eval_key, [eval_path]):
            artifacts.timings.append({"stage": "evaluate", "seconds": 0.0, "cache_hit": True})
        else:
            try:
                cohort = eval_mod.load_scores_csv(config.path("evaluation", "scores_csv"))
                result = eval_mod.permutation_test(
                    cohort,
                    n_resamples=int(eval_cfg.get("resamples", eval_mod.DEFAULT_RESAMPLES)),
                    seed=int(eval_cfg.get("seed", config.seed)),
                )
                payload = json.loads(result.to_json())
                _write_json(eval_path, _stamp(payload, config_hash))
                cache.update("evaluate", eval_key)
            except Exception as exc:
                raise PipelineError("evaluate", str(exc)) from exc
            artifacts.timings.append(
                {"stage": "evaluate", "seconds": round(time.perf_counter() - started, 3), "cache_hit": False}
            )
        artifacts.register("evaluation_report", eval_path)

    timing_path = output_dir / "timing.json"
    timing_path.write_text(json.dumps(artifacts.timings, indent=2) + "\n", encoding="utf-8")
    manifest = {
        "artifacts": {
            name: {"path": path.name, "sha256": _hash_file(path)}
            for name, path in sorted(artifacts.files.items())
            if path.exists()
        }
    }
    _write_json(output_dir / "run_manifest.json", _stamp(manifest, config_hash))
    artifacts.register("run_manifest", output_dir / "run_manifest.json")
    return artifacts


def assign_all_tracks(config, resources, context, engine, specs, model) -> dict:
    """Solve each track independently and merge the results."""
    corpus_cfg = context["corpus_cfg"]
    judges = context["judges"]
    ventures = context["ventures"]
    constraints_cfg = config.section("constraints")
    default_panel = int(constraints_cfg.get("panel_size", asg.DEFAULT_PANEL_SIZE))
    default_load = int(constraints_cfg.get("load_max", asg.DEFAULT_LOAD_MAX))
    per_track = constraints_cfg.get("per_track") or {}

    merged_pairs = []
    report_tracks = []
    grid_lines = ["judge_id,venture_id,similarity,track"]
    assignment_lines = ["judge_id,venture_id,similarity,track"]
    track_states = {}
    for track in corpus_cfg.tracks:
        track_judges = [j for j in judges if track in j.preferred_tracks]
        track_ventures = [v for v in ventures if v.track == track]
        if not track_ventures:
            continue
        overrides = per_track.get(track) or {}
        constraints = asg.constraints_from_entities(
            track_judges,
            track_ventures,
            coi_pairs=corpus_cfg.coi_pairs,
            panel_size=int(overrides.get("panel_size", default_panel)),
            load_max=int(overrides.get("load_max", default_load)),
        )
        predictions = grid_predictions(
            engine,
            specs,
            model,
            [j.judge_id for j in track_judges],
            [v.venture_id for v in track_ventures],
        )
        grid = asg.build_grid(predictions, constraints)
        result = asg.assign_maxmin(grid, constraints)
        violations = asg.validate(result, grid, constraints)
        if violations:
            raise PipelineError("assign", f"track {track!r} produced violations: {violations}")
        for (judge_id, venture_id) in sorted(predictions):
            if grid.is_eligible(judge_id, venture_id):
                grid_lines.append(f"{judge_id},{venture_id},{predictions[(judge_id, venture_id)]:.6f},{track}")
        for judge_id, venture_id in sorted(result.pairs):
            sim = grid.similarity(judge_id, venture_id)
            assignment_lines.append(f"{judge_id},{venture_id},{sim:.6f},{track}")
            merged_pairs.append((judge_id, venture_id))
        report_tracks.append(
            {"track": track, **asg.assignment_report(result, grid, constraints)}
        )
        track_states[track] = {"grid": grid, "constraints": constraints, "assignment": result}

    report = {
        "tracks": report_tracks,
        "quality": {
            "predicted_quality_scale": [1, 5],
            "note": f"quality = {quality_from_similarity(0):g} + 4 * similarity",
        },
    }
    return {
        "grid_csv": "\n".join(grid_lines) + "\n",
        "assignment_csv": "\n".join(assignment_lines) + "\n",
        "report": report,
        "track_states": track_states,
        "merged_pairs": merged_pairs,
    }


def export_artifact(artifacts_dir, name: str, fmt: str, dest) -> Path:
    """Deterministic re-export of a named pipeline artifact."""
    artifacts_dir = Path(artifacts_dir)
    known = {
        "assignment": ("assignment.csv", "assignment_report.json"),
        "grid": ("similarity_grid.csv", None),
        "evaluation": (None, "evaluation_report.json"),
        "provenance": (None, "provenance.json"),
    }
    if name not in known:
        raise ValueError(f"unknown artifact {name!r}; expected one of {sorted(known)}")
    csv_name, json_name = known[name]
    source = csv_name if fmt == "csv" else json_name
    if source is None:
        raise ValueError(f"artifact {name!r} has no {fmt} representation")
    source_path = artifacts_dir / source
    if not source_path.exists():
        raise FileNotFoundError(f"artifact file {source_path} does not exist; run the pipeline first")
    dest = Path(dest)
    dest.parent.mkdir(parents=True, exist_ok=True)
    dest.write_bytes(source_path.read_bytes())
    return dest
