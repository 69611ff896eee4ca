import json

import httpx
import pytest

from judgematch.corpus import Document
from judgematch.llm import (
    INSTRUCTION,
    LearnerUnavailableError,
    PromptConfig,
    ScoreCache,
    ScoreParseError,
    build_messages,
    parse_score,
    score_pair,
)


def doc(doc_id, text, role):
    return Document(
        doc_id=doc_id, role=role, text=text, tokens=tuple(text.split()),
        word_count=len(text.split()), track_ids=("Open",),
    )


VENTURE = doc("venture:V1", "robotic surgery platform", "venture")
JUDGE = doc("judge:J1", "surgeon and medtech investor", "judge")


# -- parse_score ------------------------------------------------------------------


def test_parse_plain_number():
    assert parse_score("4") == 4


def test_parse_with_whitespace():
    assert parse_score(" 5\n") == 5


def test_parse_score_prefixed():
    assert parse_score("Score: 3") == 3


def test_parse_out_of_range():
    with pytest.raises(ScoreParseError):
        parse_score("6")


def test_parse_no_integer():
    with pytest.raises(ScoreParseError):
        parse_score("great match")


def test_parse_strips_echoed_instruction():
    raw = INSTRUCTION + " 2"
    assert parse_score(raw) == 2


def test_parse_strips_echoed_range_phrase():
    assert parse_score("between 1 to 5: 2") == 2
    assert parse_score("On a scale of 1-5 I rate this 4") == 4


# -- prompt assembly ---------------------------------------------------------------


def test_prompt_config_validations():
    with pytest.raises(ValueError):
        PromptConfig(temperature=0.7)
    with pytest.raises(ValueError):
        PromptConfig(shots=1, examples=())
    with pytest.raises(ValueError):
        PromptConfig(shots=3, examples=(("v", "j", 3),) * 3)


def test_messages_embed_instruction_verbatim():
    cfg = PromptConfig()
    messages = build_messages(VENTURE, JUDGE, cfg)
    assert messages[0] == {"role": "system", "content": INSTRUCTION}
    assert messages[-1]["content"] == f"D1: {VENTURE.text}\nD2: {JUDGE.text}"


def test_few_shot_examples_prepended_in_order():
    cfg = PromptConfig(shots=2, examples=(("vent a", "judge a", 5), ("vent b", "judge b", 2)))
    messages = build_messages(VENTURE, JUDGE, cfg)
    assert [m["role"] for m in messages] == ["system", "user", "assistant", "user", "assistant", "user"]
    assert messages[1]["content"] == "D1: vent a\nD2: judge a"
    assert messages[2]["content"] == "5"
    assert messages[4]["content"] == "2"


# -- score_pair against a mocked service --------------------------------------------


def mock_client(handler):
    return httpx.Client(transport=httpx.MockTransport(handler))


def completion(content):
    return {"choices": [{"message": {"content": content}}]}


def test_score_pair_happy_path_and_request_body():
    captured = {}

    def handler(request):
        captured["body"] = json.loads(request.content)
        return httpx.Response(200, json=completion("4"))

    audit = []
    score = score_pair(VENTURE, JUDGE, PromptConfig(), client=mock_client(handler), audit_log=audit)
    assert score == 4
    body = captured["body"]
    assert body["temperature"] == 0.0
    assert body["messages"][0]["content"] == INSTRUCTION
    assert audit and audit[0]["response"] == "4"


def test_score_pair_deterministic_with_mock():
    def handler(request):
        return httpx.Response(200, json=completion("3"))

    results = {
        score_pair(VENTURE, JUDGE, PromptConfig(), client=mock_client(handler))
        for _ in range(5)
    }
    assert results == {3}


def test_score_pair_retries_then_succeeds():
    calls = {"n": 0}

    def handler(request):
        calls["n"] += 1
        if calls["n"] < 3:
            return httpx.Response(503)
        return httpx.Response(200, json=completion("2"))

    naps = []
    score = score_pair(
        VENTURE, JUDGE, PromptConfig(), client=mock_client(handler), sleep=naps.append
    )
    assert score == 2
    assert calls["n"] == 3
    assert naps == [1.0, 2.0]  # exponential backoff


def test_score_pair_fails_after_three_attempts():
    calls = {"n": 0}

    def handler(request):
        calls["n"] += 1
        return httpx.Response(500)

    with pytest.raises(LearnerUnavailableError):
        score_pair(VENTURE, JUDGE, PromptConfig(), client=mock_client(handler), sleep=lambda s: None)
    assert calls["n"] == 3


def test_score_pair_unparseable_response_carries_raw_text():
    def handler(request):
        return httpx.Response(200, json=completion("wonderful fit"))

    with pytest.raises(ScoreParseError, match="wonderful fit"):
        score_pair(VENTURE, JUDGE, PromptConfig(), client=mock_client(handler))


def test_score_pair_requires_nonempty_documents():
    empty = doc("venture:V0", "", "venture")
    with pytest.raises(ValueError):
        score_pair(empty, JUDGE, PromptConfig())


# -- offline cache -------------------------------------------------------------------


def test_cache_roundtrip(tmp_path):
    cache = ScoreCache()
    cache.put("J1", "V1", 0, 4)
    cache.put("J1", "V2", 2, 1)
    path = tmp_path / "cache.jsonl"
    cache.dump(path)
    loaded = ScoreCache.load(path)
    assert loaded.get("J1", "V1", 0) == 4
    assert loaded.get("J1", "V2", 2) == 1


def test_cache_miss_is_learner_failure(tmp_path):
    cache = ScoreCache.load(tmp_path / "missing.jsonl")
    with pytest.raises(LearnerUnavailableError):
        cache.get("J1", "V1", 0)
