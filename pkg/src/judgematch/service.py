"""HTTP API over a completed run: browse the assignment, fetch suggestions, commit swaps."""

from __future__ import annotations

import csv
import os
import threading
import time
from dataclasses import dataclass, field

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from pydantic import BaseModel

from . import assignment as asg
from . import corpus as corpus_mod
from .pipeline import RunConfig

API_TOKEN_ENV = "JUDGEMATCH_API_TOKEN"
LISTEN_ENV = "JUDGEMATCH_LISTEN"


@dataclass
class TrackState:
    grid: asg.SimilarityGrid
    constraints: asg.ConstraintSet


@dataclass
class ServiceState:
    tracks: dict[str, TrackState]
    venture_track: dict[str, str]
    judge_tracks: dict[str, list[str]]
    pairs: set[tuple[str, str]]
    load_max: int
    config_hash: str = ""
    version: int = 1
    audit: list[dict] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def similarity(self, judge_id: str, venture_id: str) -> float:
        track = self.venture_track[venture_id]
        return self.tracks[track].grid.similarity(judge_id, venture_id)

    def venture_quality(self, venture_id: str) -> float:
        return sum(self.similarity(j, v) for j, v in self.pairs if v == venture_id)

    def judges_of(self, venture_id: str) -> list[str]:
        return sorted(j for j, v in self.pairs if v == venture_id)

    def load_of(self, judge_id: str) -> int:
        return sum(1 for j, _ in self.pairs if j == judge_id)

    def track_assignment(self, track: str) -> asg.Assignment:
        state = self.tracks[track]
        pairs = frozenset((j, v) for j, v in self.pairs if self.venture_track[v] == track)
        quality = {v: 0.0 for v in state.grid.venture_ids}
        for judge_id, venture_id in pairs:
            quality[venture_id] += state.grid.similarity(judge_id, venture_id)
        return asg.Assignment(pairs=pairs, venture_quality=quality)


def build_state(config: RunConfig) -> ServiceState:
    """Reconstruct service state from a completed run's exported artifacts."""
    output_dir = config.output_dir
    assignment_path = output_dir / "assignment.csv"
    grid_path = output_dir / "similarity_grid.csv"
    if not assignment_path.exists() or not grid_path.exists():
        raise FileNotFoundError(f"run artifacts missing under {output_dir}; run the pipeline first")

    corpus_cfg = corpus_mod.load_corpus_config(config.path("corpus", "config"))
    judges = corpus_mod.ingest(
        corpus_mod.read_csv(config.path("corpus", "judges_csv")), corpus_cfg.judge_schema, list(corpus_cfg.tracks)
    )
    ventures = corpus_mod.ingest(
        corpus_mod.read_csv(config.path("corpus", "ventures_csv")), corpus_cfg.venture_schema, list(corpus_cfg.tracks)
    )
    constraints_cfg = config.section("constraints")
    default_panel = int(constraints_cfg.get("panel_size", asg.DEFAULT_PANEL_SIZE))
    default_load = int(constraints_cfg.get("load_max", asg.DEFAULT_LOAD_MAX))
    per_track = constraints_cfg.get("per_track") or {}

    grid_rows: dict[str, list[dict]] = {}
    with open(grid_path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            grid_rows.setdefault(row["track"], []).append(row)

    tracks: dict[str, TrackState] = {}
    for track, rows in grid_rows.items():
        predictions = {(r["judge_id"], r["venture_id"]): float(r["similarity"]) for r in rows}
        overrides = per_track.get(track) or {}
        track_judges = [j for j in judges if track in j.preferred_tracks]
        track_ventures = [v for v in ventures if v.track == track]
        constraints = asg.constraints_from_entities(
            track_judges,
            track_ventures,
            coi_pairs=corpus_cfg.coi_pairs,
            panel_size=int(overrides.get("panel_size", default_panel)),
            load_max=int(overrides.get("load_max", default_load)),
        )
        grid = asg.build_grid(predictions, constraints)
        tracks[track] = TrackState(grid=grid, constraints=constraints)

    pairs = set()
    with open(assignment_path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            pairs.add((row["judge_id"], row["venture_id"]))

    config_hash = config.config_hash()
    return ServiceState(
        tracks=tracks,
        venture_track={v.venture_id: v.track for v in ventures},
        judge_tracks={j.judge_id: list(j.preferred_tracks) for j in judges},
        pairs=pairs,
        load_max=default_load,
        config_hash=config_hash,
    )


class SwapRequest(BaseModel):
    venture_id: str
    remove_judge_id: str
    add_judge_id: str
    expected_version: int
    actor: str = "organizer"


def replay_audit(initial_pairs: set[tuple[str, str]], audit: list[dict]) -> set[tuple[str, str]]:
    """Reapply the audit log to the initial assignment; must reproduce current state."""
    pairs = set(initial_pairs)
    for event in audit:
        pairs.discard((event["remove_judge_id"], event["venture_id"]))
        pairs.add((event["add_judge_id"], event["venture_id"]))
    return pairs


def swap_violations(state: ServiceState, req: SwapRequest) -> list[dict]:
    """Constraint checks for a proposed swap; empty list means the swap is legal."""
    violations = []
    venture_id = req.venture_id
    track = state.venture_track.get(venture_id)
    if track is None:
        return [{"kind": "unknown_venture", "venture_id": venture_id}]
    grid = state.tracks[track].grid
    constraints = state.tracks[track].constraints
    if (req.remove_judge_id, venture_id) not in state.pairs:
        violations.append(
            {"kind": "not_assigned", "judge_id": req.remove_judge_id, "venture_id": venture_id}
        )
    if (req.add_judge_id, venture_id) in state.pairs:
        violations.append(
            {"kind": "already_assigned", "judge_id": req.add_judge_id, "venture_id": venture_id}
        )
    if req.add_judge_id not in grid.judge_ids or not grid.is_eligible(req.add_judge_id, venture_id):
        kind = "coi" if (req.add_judge_id, venture_id) in constraints.coi_pairs else "ineligible_pair"
        violations.append({"kind": kind, "judge_id": req.add_judge_id, "venture_id": venture_id})
    elif state.load_of(req.add_judge_id) >= constraints.judge_load_max:
        violations.append(
            {
                "kind": "load_max",
                "judge_id": req.add_judge_id,
                "observed": state.load_of(req.add_judge_id),
                "required": constraints.judge_load_max,
            }
        )
    return violations


def create_app(state: ServiceState, api_token: str | None = None) -> FastAPI:
    app = FastAPI(title="judgematch", version="0.1.0")
    token = api_token if api_token is not None else os.environ.get(API_TOKEN_ENV)

    def check_auth(request: Request) -> None:
        if token and request.headers.get("Authorization") != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="missing or invalid bearer token")

    def assignment_payload() -> dict:
        ventures = []
        for venture_id in sorted(state.venture_track):
            track = state.venture_track[venture_id]
            judges = [
                {"judge_id": j, "similarity": round(state.similarity(j, venture_id), 6)}
                for j in state.judges_of(venture_id)
            ]
            ventures.append(
                {
                    "venture_id": venture_id,
                    "track": track,
                    "quality": round(state.venture_quality(venture_id), 6),
                    "panel_size_required": state.tracks[track].constraints.venture_panel_size,
                    "judges": judges,
                }
            )
        pairs = [
            {
                "judge_id": j,
                "venture_id": v,
                "similarity": round(state.similarity(j, v), 6),
                "track": state.venture_track[v],
            }
            for j, v in sorted(state.pairs)
        ]
        return {"version": state.version, "ventures": ventures, "pairs": pairs}

    @app.get("/ventures", dependencies=[Depends(check_auth)])
    def get_ventures(track: str | None = None):
        payload = assignment_payload()["ventures"]
        if track is not None:
            payload = [v for v in payload if v["track"] == track]
        return {"version": state.version, "ventures": payload}

    @app.get("/judges", dependencies=[Depends(check_auth)])
    def get_judges():
        judges = []
        for judge_id in sorted(state.judge_tracks):
            ventures = sorted(v for j, v in state.pairs if j == judge_id)
            judges.append(
                {
                    "judge_id": judge_id,
                    "tracks": state.judge_tracks[judge_id],
                    "load": len(ventures),
                    "load_max": state.load_max,
                    "ventures": ventures,
                }
            )
        return {"version": state.version, "judges": judges}

    @app.get("/assignment", dependencies=[Depends(check_auth)])
    def get_assignment():
        return assignment_payload()

    @app.get("/similarity", dependencies=[Depends(check_auth)])
    def get_similarity(judge: str = Query(...), venture: str = Query(...)):
        track = state.venture_track.get(venture)
        if track is None:
            raise HTTPException(status_code=404, detail=f"unknown venture {venture!r}")
        grid = state.tracks[track].grid
        if judge not in grid.judge_ids:
            raise HTTPException(status_code=404, detail=f"judge {judge!r} not eligible for track {track!r}")
        return {
            "judge_id": judge,
            "venture_id": venture,
            "similarity": round(grid.similarity(judge, venture), 6),
            "eligible": grid.is_eligible(judge, venture),
        }

    @app.get("/suggestions", dependencies=[Depends(check_auth)])
    def get_suggestions(venture: str = Query(...), removed: str = Query(...), k: int = Query(10)):
        track = state.venture_track.get(venture)
        if track is None:
            raise HTTPException(status_code=404, detail=f"unknown venture {venture!r}")
        track_state = state.tracks[track]
        merged = state.track_assignment(track)
        if (removed, venture) not in merged.pairs:
            raise HTTPException(status_code=409, detail=f"judge {removed!r} is not assigned to {venture!r}")
        ranked = []
        for judge_id, similarity in asg.suggest_replacements(
            merged, venture, removed, k=len(track_state.grid.judge_ids), grid=track_state.grid,
            constraints=track_state.constraints,
        ):
            # load cap must hold across tracks, not just within this one
            if state.load_of(judge_id) >= track_state.constraints.judge_load_max:
                continue
            ranked.append({"judge_id": judge_id, "similarity": round(similarity, 6)})
            if len(ranked) == k:
                break
        return {"venture_id": venture, "removed_judge_id": removed, "candidates": ranked}

    @app.get("/violations", dependencies=[Depends(check_auth)])
    def get_violations():
        violations = []
        for track, track_state in sorted(state.tracks.items()):
            merged = state.track_assignment(track)
            for violation in asg.validate(merged, track_state.grid, track_state.constraints):
                violations.append({"track": track, **violation.to_dict()})
        return {"version": state.version, "violations": violations}

    @app.get("/report", dependencies=[Depends(check_auth)])
    def get_report():
        tracks = []
        for track, track_state in sorted(state.tracks.items()):
            merged = state.track_assignment(track)
            tracks.append({"track": track, **asg.assignment_report(merged, track_state.grid, track_state.constraints)})
        return {
            "version": state.version,
            "config_hash": state.config_hash,
            "tracks": tracks,
            "audit_length": len(state.audit),
        }

    @app.post("/assignment/swap", dependencies=[Depends(check_auth)])
    def post_swap(req: SwapRequest):
        with state.lock:
            if req.expected_version != state.version:
                raise HTTPException(
                    status_code=409,
                    detail={
                        "error": "version_conflict",
                        "expected_version": req.expected_version,
                        "current_version": state.version,
                    },
                )
            violations = swap_violations(state, req)
            if violations:
                raise HTTPException(
                    status_code=409, detail={"error": "constraint_violation", "violations": violations}
                )
            state.pairs.discard((req.remove_judge_id, req.venture_id))
            state.pairs.add((req.add_judge_id, req.venture_id))
            # revalidate the mutated track before committing
            track = state.venture_track[req.venture_id]
            track_state = state.tracks[track]
            merged = state.track_assignment(track)
            residual = asg.validate(merged, track_state.grid, track_state.constraints)
            if residual:
                state.pairs.discard((req.add_judge_id, req.venture_id))
                state.pairs.add((req.remove_judge_id, req.venture_id))
                raise HTTPException(
                    status_code=409,
                    detail={
                        "error": "constraint_violation",
                        "violations": [v.to_dict() for v in residual],
                    },
                )
            state.version += 1
            event = {
                "version": state.version,
                "venture_id": req.venture_id,
                "remove_judge_id": req.remove_judge_id,
                "add_judge_id": req.add_judge_id,
                "actor": req.actor,
                "timestamp": time.time(),
            }
            state.audit.append(event)
            return {
                "version": state.version,
                "venture_id": req.venture_id,
                "quality": round(state.venture_quality(req.venture_id), 6),
            }

    return app


def serve(config: RunConfig, host: str | None = None, port: int | None = None) -> None:
    """Run the review API with uvicorn; listen address from args or JUDGEMATCH_LISTEN."""
    import uvicorn

    listen = os.environ.get(LISTEN_ENV, "127.0.0.1:8000")
    default_host, _, default_port = listen.partition(":")
    state = build_state(config)
    app = create_app(state)
    uvicorn.run(app, host=host or default_host, port=port or int(default_port or 8000))
