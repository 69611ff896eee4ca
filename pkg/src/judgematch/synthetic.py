"""Deterministic synthetic competition datasets for tests, benchmarks, and demos."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np
import yaml

from .corpus import sanitize

DEFAULT_TRACKS = ("Open", "Social Impact", "Healthcare and Life Sciences")
DEFAULT_MODEL_ID = "synthmodel"
SYNTH_TOKENIZER = "synth-wordpiece-v1"

_THEME_WORDS = {
    "Open": [
        "platform", "marketplace", "logistics", "fintech", "payments", "retail",
        "consumer", "saas", "analytics", "mobility", "gaming", "media",
    ],
    "Social Impact": [
        "education", "climate", "sustainability", "nonprofit", "equity", "access",
        "community", "policy", "agriculture", "water", "energy", "housing",
    ],
    "Healthcare and Life Sciences": [
        "diagnostics", "therapeutics", "biotech", "genomics", "oncology", "devices",
        "clinical", "telehealth", "pharma", "imaging", "neurology", "vaccines",
    ],
}

_FILLER_WORDS = [
    "venture", "team", "market", "product", "growth", "strategy", "customers",
    "revenue", "technology", "data", "experience", "network", "capital", "scale",
]


def _token_vector(token: str, dim: int) -> np.ndarray:
    seed = int.from_bytes(hashlib.sha256(token.encode("utf-8")).digest()[:8], "big")
    rng = np.random.default_rng(seed)
    vec = rng.standard_normal(dim)
    return vec / np.linalg.norm(vec)


def _doc_words(rng: np.random.Generator, track: str, n_words: int) -> list[str]:
    theme = _THEME_WORDS[track]
    words = []
    for _ in range(n_words):
        if rng.random() < 0.6:
            words.append(theme[int(rng.integers(len(theme)))])
        else:
            words.append(_FILLER_WORDS[int(rng.integers(len(_FILLER_WORDS)))])
    return words


def make_dataset(
    outdir,
    n_judges: int = 24,
    n_ventures: int = 9,
    tracks=DEFAULT_TRACKS,
    panel_size: int = 4,
    load_max: int = 3,
    n_labels: int = 60,
    seed: int = 20250401,
    model_ids=(DEFAULT_MODEL_ID,),
    embedding_dim: int = 32,
    resamples: int = 2000,
    with_scores: bool = True,
) -> dict:
    """Write a complete synthetic dataset plus run config; returns the path map."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    tracks = tuple(tracks)

    judges = []
    for i in range(n_judges):
        judge_id = f"J{i + 1:03d}"
        primary = tracks[i % len(tracks)]
        preferred = [primary]
        if rng.random() < 0.3 and len(tracks) > 1:
            other = tracks[int(rng.integers(len(tracks)))]
            if other not in preferred:
                preferred.append(other)
        short = rng.random() < 0.15
        n_words = int(rng.integers(12, 30)) if short else int(rng.integers(55, 90))
        words = _doc_words(rng, primary, n_words)
        judges.append(
            {
                "judge_id": judge_id,
                "bio": " ".join(words),
                "expertise_areas": ";".join(sorted(set(words[:6]))),
                "industries": ";".join(sorted(set(words[6:10]))),
                "preferred_tracks": ";".join(preferred),
                "internal_notes": f"row {i}",  # unselected column, dropped at ingest
            }
        )

    ventures = []
    for i in range(n_ventures):
        venture_id = f"V{i + 1:03d}"
        track = tracks[i % len(tracks)]
        pitch_words = _doc_words(rng, track, int(rng.integers(40, 70)))
        ventures.append(
            {
                "venture_id": venture_id,
                "track": track,
                "pitch": " ".join(pitch_words),
                "problem": " ".join(_doc_words(rng, track, 15)),
                "solution": " ".join(_doc_words(rng, track, 15)),
                "industry": _THEME_WORDS[track][i % len(_THEME_WORDS[track])],
                "legacy_id": f"X{i}",  # unselected column
            }
        )

    paths = {}
    paths["judges_csv"] = _write_csv(outdir / "judges.csv", judges)
    paths["ventures_csv"] = _write_csv(outdir / "ventures.csv", ventures)

    supplements = []
    for judge in judges:
        if len(judge["bio"].split()) < 50:
            extra = _doc_words(rng, judge["preferred_tracks"].split(";")[0], 60)
            supplements.append({"judge_id": judge["judge_id"], "text": " ".join(extra)})
    paths["supplements_csv"] = _write_csv(
        outdir / "supplements.csv", supplements or [{"judge_id": "", "text": ""}]
    )

    coi = []
    judge_by_track: dict[str, list[dict]] = {}
    for judge in judges:
        for track in judge["preferred_tracks"].split(";"):
            judge_by_track.setdefault(track, []).append(judge)
    for venture in ventures[:: max(1, n_ventures // 3)]:
        eligible = judge_by_track.get(venture["track"], [])
        if len(eligible) > panel_size + 1:
            coi.append([eligible[0]["judge_id"], venture["venture_id"]])

    corpus_config = {
        "tracks": list(tracks),
        "judges": {
            "selected_fields": ["bio", "expertise_areas", "industries"],
            "join_separator": " ",
        },
        "ventures": {
            "selected_fields": ["pitch", "problem", "solution", "industry"],
            "join_separator": " ",
        },
        "coi": coi,
    }
    paths["corpus_config"] = outdir / "corpus.yaml"
    paths["corpus_config"].write_text(yaml.safe_dump(corpus_config, sort_keys=True), encoding="utf-8")

    # labels: overlap-driven quality so the ensemble has real signal
    doc_tokens = {}
    for judge in judges:
        text = sanitize(" ".join([judge["bio"], judge["expertise_areas"], judge["industries"]]))
        doc_tokens[f"judge:{judge['judge_id']}"] = text.split()
    for venture in ventures:
        text = sanitize(" ".join([venture["pitch"], venture["problem"], venture["solution"], venture["industry"]]))
        doc_tokens[f"venture:{venture['venture_id']}"] = text.split()

    eligible_pairs = []
    for venture in ventures:
        for judge in judge_by_track.get(venture["track"], []):
            if [judge["judge_id"], venture["venture_id"]] not in coi:
                eligible_pairs.append((judge["judge_id"], venture["venture_id"]))
    rng.shuffle(eligible_pairs)
    labels = []
    for judge_id, venture_id in eligible_pairs[: min(n_labels, len(eligible_pairs))]:
        a = set(doc_tokens[f"judge:{judge_id}"])
        b = set(doc_tokens[f"venture:{venture_id}"])
        overlap = len(a & b) / max(1, min(len(a), len(b)))
        noisy = overlap + rng.normal(0, 0.08)
        quality = int(np.clip(round(1 + 4 * min(1.0, noisy * 1.6)), 1, 5))
        labels.append({"judge_id": judge_id, "venture_id": venture_id, "quality": quality})
    paths["labels_csv"] = _write_csv(outdir / "labels.csv", labels)

    background_texts = [
        " ".join(_doc_words(rng, tracks[i % len(tracks)], int(rng.integers(30, 60))))
        for i in range(40)
    ]
    paths["background_jsonl"] = outdir / "background.jsonl"
    with open(paths["background_jsonl"], "w", encoding="utf-8") as fh:
        for i, text in enumerate(background_texts):
            fh.write(json.dumps({"id": f"bg{i}", "text": text}, sort_keys=True) + "\n")

    embedding_files = {}
    for model_id in model_ids:
        path = outdir / f"embeddings_{model_id}.jsonl"
        with open(path, "w", encoding="utf-8") as fh:
            for doc_id in sorted(doc_tokens):
                tokens = doc_tokens[doc_id]
                vectors = [np.round(_token_vector(f"{model_id}:{t}", embedding_dim), 6).tolist() for t in tokens]
                fh.write(
                    json.dumps(
                        {
                            "doc_id": doc_id,
                            "model_id": model_id,
                            "tokenizer_id": SYNTH_TOKENIZER,
                            "tokens": tokens,
                            "vectors": vectors,
                        }
                    )
                    + "\n"
                )
        bg_path = outdir / f"background_tokens_{model_id}.jsonl"
        with open(bg_path, "w", encoding="utf-8") as fh:
            for i, text in enumerate(background_texts):
                fh.write(
                    json.dumps(
                        {
                            "doc_id": f"bg{i}",
                            "tokenizer_id": SYNTH_TOKENIZER,
                            "tokens": sanitize(text).split(),
                        }
                    )
                    + "\n"
                )
        embedding_files[model_id] = {"file": path.name, "background_tokens": bg_path.name}

    if with_scores:
        score_rows = []
        for venture in ventures:
            base = rng.integers(3, 5)
            for source, count in (("algorithmic", 3), ("manual", 3), ("both", 2)):
                for k in range(count):
                    score = int(np.clip(base + rng.integers(-1, 2), 1, 5))
                    score_rows.append(
                        {
                            "judge_id": f"S{len(score_rows)}",
                            "venture_id": venture["venture_id"],
                            "source": source,
                            "score": score,
                        }
                    )
        paths["scores_csv"] = _write_csv(outdir / "scores.csv", score_rows)

    run_config = {
        "run": {"output_dir": "artifacts", "seed": int(seed % 100000)},
        "corpus": {
            "judges_csv": "judges.csv",
            "ventures_csv": "ventures.csv",
            "labels_csv": "labels.csv",
            "supplements_csv": "supplements.csv",
            "config": "corpus.yaml",
        },
        "lexical": {"background_jsonl": "background.jsonl"},
        "embeddings": {m: dict(files) for m, files in embedding_files.items()},
        "roster": "default",
        "ensemble": {"folds": 5, "threshold": 0.01, "seed": 7},
        "constraints": {"panel_size": panel_size, "load_max": load_max, "per_track": {}},
        "evaluation": (
            {"scores_csv": "scores.csv", "resamples": resamples, "seed": 99} if with_scores else None
        ),
        "llm": {"enabled": False},
    }
    run_config = {k: v for k, v in run_config.items() if v is not None}
    paths["config"] = outdir / "config.yaml"
    paths["config"].write_text(yaml.safe_dump(run_config, sort_keys=True), encoding="utf-8")
    return paths


def _write_csv(path: Path, rows: list[dict]) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    return path
