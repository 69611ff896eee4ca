"""Record API responses from a synthetic run into a fixture for the dashboard's contract tests.

Writes frontend/tests/fixtures/api_fixture.json. The dashboard test suite
replays these recorded responses through a mocked fetch, so it exercises the
exact payload shapes the live service produces.
"""

import argparse
import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from judgematch.pipeline import RunConfig, run_pipeline
from judgematch.service import build_state, create_app
from judgematch.synthetic import make_dataset


def find_valid_swap(client):
    assignment = client.get("/assignment").json()
    for venture in assignment["ventures"]:
        for judge in venture["judges"]:
            suggestions = client.get(
                "/suggestions",
                params={"venture": venture["venture_id"], "removed": judge["judge_id"], "k": 10},
            )
            if suggestions.status_code == 200 and suggestions.json()["candidates"]:
                return venture, judge["judge_id"], suggestions.json()
    raise SystemExit("no legal swap available; adjust dataset parameters")


def find_load_violation(client):
    judges = client.get("/judges").json()["judges"]
    assignment = client.get("/assignment").json()
    at_cap = [j for j in judges if j["load"] >= j["load_max"]]
    for judge in at_cap:
        for venture in assignment["ventures"]:
            panel = {j["judge_id"] for j in venture["judges"]}
            if judge["judge_id"] in panel or venture["track"] not in judge["tracks"]:
                continue
            return venture, judge["judge_id"]
    raise SystemExit("no judge at load cap; adjust dataset parameters")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="frontend/tests/fixtures/api_fixture.json")
    args = parser.parse_args()

    workdir = Path(tempfile.mkdtemp(prefix="judgematch-fixture-"))
    paths = make_dataset(workdir, n_judges=18, n_ventures=9, panel_size=4, load_max=3, resamples=100)
    run_pipeline(RunConfig.load(paths["config"]))
    state = build_state(RunConfig.load(paths["config"]))
    client = TestClient(create_app(state))

    corpus_cfg = paths["corpus_config"].read_text(encoding="utf-8")
    import yaml

    coi_judge, coi_venture = yaml.safe_load(corpus_cfg)["coi"][0]

    fixture = {"base": {}, "swaps": {}}
    for path in ("/assignment", "/ventures", "/judges", "/violations", "/report"):
        fixture["base"][path] = client.get(path).json()

    venture, removed, suggestions = find_valid_swap(client)
    fixture["base"][f"/suggestions?venture={venture['venture_id']}&removed={removed}&k=10"] = suggestions

    load_venture, overloaded_judge = find_load_violation(client)
    load_request = {
        "venture_id": load_venture["venture_id"],
        "remove_judge_id": load_venture["judges"][0]["judge_id"],
        "add_judge_id": overloaded_judge,
        "expected_version": 1,
    }
    load_response = client.post("/assignment/swap", json=load_request)
    assert load_response.status_code == 409
    fixture["swaps"]["load"] = {
        "request": load_request, "status": 409, "response": load_response.json(),
    }

    coi_panel = next(
        v for v in fixture["base"]["/assignment"]["ventures"] if v["venture_id"] == coi_venture
    )
    coi_request = {
        "venture_id": coi_venture,
        "remove_judge_id": coi_panel["judges"][0]["judge_id"],
        "add_judge_id": coi_judge,
        "expected_version": 1,
    }
    coi_response = client.post("/assignment/swap", json=coi_request)
    assert coi_response.status_code == 409
    fixture["swaps"]["coi"] = {"request": coi_request, "status": 409, "response": coi_response.json()}

    stale_request = {
        "venture_id": venture["venture_id"],
        "remove_judge_id": removed,
        "add_judge_id": suggestions["candidates"][0]["judge_id"],
        "expected_version": 99,
    }
    stale_response = client.post("/assignment/swap", json=stale_request)
    assert stale_response.status_code == 409
    fixture["swaps"]["version_conflict"] = {
        "request": stale_request, "status": 409, "response": stale_response.json(),
    }

    valid_request = dict(stale_request, expected_version=1)
    valid_response = client.post("/assignment/swap", json=valid_request)
    assert valid_response.status_code == 200, valid_response.text
    fixture["swaps"]["valid"] = {
        "request": valid_request,
        "status": 200,
        "response": valid_response.json(),
        "assignment_after": client.get("/assignment").json(),
    }

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(fixture, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"recorded fixture at {out} ({out.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
