import pytest
from fastapi.testclient import TestClient

from judgematch.assignment import build_grid, constraints_from_entities
from judgematch.corpus import JudgeProfile, VentureApplication
from judgematch.service import ServiceState, TrackState, build_state, create_app, replay_audit


@pytest.fixture()
def state(synth_run):
    return build_state(synth_run["config"])


@pytest.fixture()
def client(state):
    return TestClient(create_app(state))


def micro_state():
    """Hand-built single-track state: J1 at the load cap, J4 has a COI with V1, J5 free."""
    judges = [JudgeProfile(f"J{i}", {}, preferred_tracks=["Open"]) for i in range(1, 6)]
    ventures = [VentureApplication(f"V{i}", "Open", {}) for i in range(1, 4)]
    constraints = constraints_from_entities(
        judges, ventures, coi_pairs={("J4", "V1")}, panel_size=1, load_max=1
    )
    predictions = {
        (f"J{i}", f"V{j}"): round(0.5 + 0.05 * i - 0.01 * j, 6)
        for i in range(1, 6)
        for j in range(1, 4)
    }
    grid = build_grid(predictions, constraints)
    return ServiceState(
        tracks={"Open": TrackState(grid=grid, constraints=constraints)},
        venture_track={v.venture_id: "Open" for v in ventures},
        judge_tracks={j.judge_id: ["Open"] for j in judges},
        pairs={("J1", "V1"), ("J2", "V2"), ("J3", "V3")},
        load_max=1,
        config_hash="micro",
    )


def find_valid_swap(client):
    """A (venture, remove, add, version) tuple the service should accept."""
    assignment = client.get("/assignment").json()
    for venture in assignment["ventures"]:
        for judge in venture["judges"]:
            suggestions = client.get(
                "/suggestions",
                params={"venture": venture["venture_id"], "removed": judge["judge_id"], "k": 5},
            )
            if suggestions.status_code == 200 and suggestions.json()["candidates"]:
                candidate = suggestions.json()["candidates"][0]
                return (
                    venture["venture_id"],
                    judge["judge_id"],
                    candidate["judge_id"],
                    assignment["version"],
                )
    pytest.fail("synthetic instance offers no legal swap")


def test_assignment_readthrough(client, synth_run):
    payload = client.get("/assignment").json()
    csv_pairs = {
        tuple(line.split(",")[:2])
        for line in synth_run["artifacts"].files["assignment"].read_text().splitlines()[1:]
    }
    api_pairs = {(p["judge_id"], p["venture_id"]) for p in payload["pairs"]}
    assert api_pairs == csv_pairs
    assert payload["version"] == 1
    for venture in payload["ventures"]:
        assert len(venture["judges"]) == venture["panel_size_required"]


def test_ventures_filter_by_track(client):
    everything = client.get("/ventures").json()["ventures"]
    tracks = {v["track"] for v in everything}
    track = sorted(tracks)[0]
    filtered = client.get("/ventures", params={"track": track}).json()["ventures"]
    assert filtered == [v for v in everything if v["track"] == track]


def test_judges_expose_load(client):
    judges = client.get("/judges").json()["judges"]
    assert judges
    for judge in judges:
        assert judge["load"] == len(judge["ventures"])
        assert judge["load"] <= judge["load_max"]


def test_similarity_lookup(client):
    pair = client.get("/assignment").json()["pairs"][0]
    response = client.get(
        "/similarity", params={"judge": pair["judge_id"], "venture": pair["venture_id"]}
    )
    assert response.status_code == 200
    assert response.json()["similarity"] == pair["similarity"]
    assert client.get("/similarity", params={"judge": "J999", "venture": "nope"}).status_code == 404


def test_violations_empty_on_fresh_run(client):
    assert client.get("/violations").json()["violations"] == []


def test_report_includes_config_hash(client, synth_run):
    report = client.get("/report").json()
    assert report["config_hash"] == synth_run["config"].config_hash()
    assert report["tracks"]


def test_valid_swap_increments_version_and_view_matches(client):
    venture_id, remove, add, version = find_valid_swap(client)
    response = client.post(
        "/assignment/swap",
        json={
            "venture_id": venture_id,
            "remove_judge_id": remove,
            "add_judge_id": add,
            "expected_version": version,
        },
    )
    assert response.status_code == 200, response.text
    assert response.json()["version"] == version + 1
    refreshed = client.get("/assignment").json()
    assert refreshed["version"] == version + 1
    panel = next(v for v in refreshed["ventures"] if v["venture_id"] == venture_id)
    judges = {j["judge_id"] for j in panel["judges"]}
    assert add in judges and remove not in judges
    assert client.get("/violations").json()["violations"] == []


def test_stale_version_conflict(client):
    venture_id, remove, add, version = find_valid_swap(client)
    response = client.post(
        "/assignment/swap",
        json={
            "venture_id": venture_id,
            "remove_judge_id": remove,
            "add_judge_id": add,
            "expected_version": version + 41,
        },
    )
    assert response.status_code == 409
    assert response.json()["detail"]["error"] == "version_conflict"
    assert client.get("/assignment").json()["version"] == version


def test_coi_swap_rejected(client, state, synth_run):
    corpus_cfg = synth_run["paths"]["corpus_config"].read_text(encoding="utf-8")
    import yaml

    coi_pairs = yaml.safe_load(corpus_cfg)["coi"]
    assert coi_pairs, "synthetic dataset should include COI pairs"
    judge_id, venture_id = coi_pairs[0]
    version = client.get("/assignment").json()["version"]
    panel = next(
        v for v in client.get("/assignment").json()["ventures"] if v["venture_id"] == venture_id
    )
    response = client.post(
        "/assignment/swap",
        json={
            "venture_id": venture_id,
            "remove_judge_id": panel["judges"][0]["judge_id"],
            "add_judge_id": judge_id,
            "expected_version": version,
        },
    )
    assert response.status_code == 409
    detail = response.json()["detail"]
    assert detail["error"] == "constraint_violation"
    assert any(v["kind"] in ("coi", "ineligible_pair") for v in detail["violations"])


def test_overloaded_judge_swap_rejected():
    # J1 already carries its full load; adding it to V2 must fail with load_max
    micro = TestClient(create_app(micro_state()))
    response = micro.post(
        "/assignment/swap",
        json={
            "venture_id": "V2",
            "remove_judge_id": "J2",
            "add_judge_id": "J1",
            "expected_version": 1,
        },
    )
    assert response.status_code == 409
    detail = response.json()["detail"]
    violation = next(v for v in detail["violations"] if v["kind"] == "load_max")
    assert violation["observed"] == 1 and violation["required"] == 1


def test_micro_coi_and_valid_swap_flow():
    micro = TestClient(create_app(micro_state()))
    coi = micro.post(
        "/assignment/swap",
        json={
            "venture_id": "V1",
            "remove_judge_id": "J1",
            "add_judge_id": "J4",
            "expected_version": 1,
        },
    )
    assert coi.status_code == 409
    assert any(v["kind"] == "coi" for v in coi.json()["detail"]["violations"])

    valid = micro.post(
        "/assignment/swap",
        json={
            "venture_id": "V1",
            "remove_judge_id": "J1",
            "add_judge_id": "J5",
            "expected_version": 1,
        },
    )
    assert valid.status_code == 200
    assert valid.json()["version"] == 2
    panel = next(v for v in micro.get("/assignment").json()["ventures"] if v["venture_id"] == "V1")
    assert [j["judge_id"] for j in panel["judges"]] == ["J5"]


def test_audit_replay_reproduces_state(client, state):
    initial = set(state.pairs)
    for _ in range(3):
        try:
            venture_id, remove, add, version = find_valid_swap(client)
        except BaseException:
            break
        client.post(
            "/assignment/swap",
            json={
                "venture_id": venture_id,
                "remove_judge_id": remove,
                "add_judge_id": add,
                "expected_version": version,
            },
        )
    assert replay_audit(initial, state.audit) == state.pairs
    assert state.version == 1 + len(state.audit)


def test_swap_requires_assigned_judge(client):
    assignment = client.get("/assignment").json()
    venture = assignment["ventures"][0]
    outsider = "J999"
    response = client.post(
        "/assignment/swap",
        json={
            "venture_id": venture["venture_id"],
            "remove_judge_id": outsider,
            "add_judge_id": venture["judges"][0]["judge_id"],
            "expected_version": assignment["version"],
        },
    )
    assert response.status_code == 409
    kinds = {v["kind"] for v in response.json()["detail"]["violations"]}
    assert "not_assigned" in kinds


def test_bearer_token_enforced(state):
    app = create_app(state, api_token="sesame")
    client = TestClient(app)
    assert client.get("/assignment").status_code == 401
    ok = client.get("/assignment", headers={"Authorization": "Bearer sesame"})
    assert ok.status_code == 200


def test_serve_wires_uvicorn(synth_run, monkeypatch):
    import judgematch.service as service_mod

    captured = {}

    def fake_run(app, host, port):
        captured["host"] = host
        captured["port"] = port
        captured["routes"] = {route.path for route in app.routes}

    import uvicorn

    monkeypatch.setattr(uvicorn, "run", fake_run)
    monkeypatch.setenv("JUDGEMATCH_LISTEN", "0.0.0.0:9000")
    service_mod.serve(synth_run["config"])
    assert captured["host"] == "0.0.0.0"
    assert captured["port"] == 9000
    assert {"/assignment", "/assignment/swap", "/suggestions", "/violations"} <= captured["routes"]


def test_suggestions_ranked_and_bounded(client):
    assignment = client.get("/assignment").json()
    venture = assignment["ventures"][0]
    removed = venture["judges"][0]["judge_id"]
    response = client.get(
        "/suggestions", params={"venture": venture["venture_id"], "removed": removed, "k": 3}
    )
    assert response.status_code == 200
    candidates = response.json()["candidates"]
    assert len(candidates) <= 3
    sims = [c["similarity"] for c in candidates]
    assert sims == sorted(sims, reverse=True)
