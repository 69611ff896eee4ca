"""Optional chat-completion base learner scoring judge-venture pairs on a 1-5 scale."""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from .corpus import Document

INSTRUCTION = (
    "You are a manual assigner who is responsible for assigning judges to ventures "
    "for a venture competition. You are given two blocks of text, D1 being the venture "
    "and D2 being the judge. You need to assess whether the judge is a good match to "
    "the venture considering whether the judge has technical expertise in the venture's "
    "area. Rate the match on a scale of 1-5 (5 is good, 1 is bad). Internalize your "
    "reasoning and only output a number between 1 to 5."
)

DEFAULT_MODEL = "gpt-4o-2024-08-06"
API_KEY_ENV = "JUDGEMATCH_LLM_API_KEY"
MAX_ATTEMPTS = 3

_INT_RE = re.compile(r"-?\d+")


class ScoreParseError(ValueError):
    def __init__(self, raw: str, reason: str):
        super().__init__(f"{reason}: {raw!r}")
        self.raw = raw


class LearnerUnavailableError(RuntimeError):
    pass


@dataclass(frozen=True)
class PromptConfig:
    model: str = DEFAULT_MODEL
    shots: int = 0
    examples: tuple[tuple[str, str, int], ...] = ()  # (venture text, judge text, score)
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = API_KEY_ENV
    temperature: float = 0.0

    def __post_init__(self):
        if self.temperature != 0.0:
            raise ValueError("temperature is fixed at 0")
        if self.shots not in (0, 1, 2):
            raise ValueError("shots must be 0, 1, or 2")
        if self.shots != len(self.examples):
            raise ValueError(f"{self.shots}-shot prompt needs exactly {self.shots} examples")


_ECHO_PHRASES = (INSTRUCTION, "scale of 1-5", "between 1 to 5", "5 is good, 1 is bad")


def parse_score(raw: str) -> int:
    """First integer in the response after dropping any echoed instruction text.

    Models sometimes repeat fragments like "between 1 to 5" before answering;
    those fragments contain digits that are not the score.
    """
    cleaned = raw
    for phrase in _ECHO_PHRASES:
        cleaned = re.sub(re.escape(phrase), " ", cleaned, flags=re.IGNORECASE)
    match = _INT_RE.search(cleaned)
    if match is None:
        raise ScoreParseError(raw, "no integer in response")
    value = int(match.group())
    if value < 1 or value > 5:
        raise ScoreParseError(raw, f"score {value} outside 1..5")
    return value


def build_messages(venture_doc: Document, judge_doc: Document, cfg: PromptConfig) -> list[dict]:
    messages = [{"role": "system", "content": INSTRUCTION}]
    for venture_text, judge_text, score in cfg.examples:
        messages.append({"role": "user", "content": f"D1: {venture_text}\nD2: {judge_text}"})
        messages.append({"role": "assistant", "content": str(score)})
    messages.append({"role": "user", "content": f"D1: {venture_doc.text}\nD2: {judge_doc.text}"})
    return messages


def score_pair(
    venture_doc: Document,
    judge_doc: Document,
    cfg: PromptConfig,
    client: httpx.Client | None = None,
    audit_log: list | None = None,
    sleep=time.sleep,
) -> int:
    """Query the chat service for a match score, retrying transient failures."""
    if not venture_doc.text or not judge_doc.text:
        raise ValueError("both documents must be non-empty")
    body = {
        "model": cfg.model,
        "temperature": cfg.temperature,
        "messages": build_messages(venture_doc, judge_doc, cfg),
    }
    headers = {}
    api_key = os.environ.get(cfg.api_key_env)
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    own_client = client is None
    client = client or httpx.Client()
    try:
        last_error: Exception | None = None
        for attempt in range(MAX_ATTEMPTS):
            try:
                response = client.post(
                    cfg.base_url.rstrip("/") + "/chat/completions",
                    json=body,
                    headers=headers,
                    timeout=60.0,
                )
                response.raise_for_status()
                payload = response.json()
            except (httpx.HTTPError, json.JSONDecodeError) as exc:
                last_error = exc
                if attempt < MAX_ATTEMPTS - 1:
                    sleep(2.0**attempt)
                continue
            raw = payload["choices"][0]["message"]["content"]
            if audit_log is not None:
                audit_log.append({"request": body, "response": raw})
            return parse_score(raw)
        raise LearnerUnavailableError(f"chat service failed after {MAX_ATTEMPTS} attempts: {last_error}")
    finally:
        if own_client:
            client.close()


@dataclass
class ScoreCache:
    """Offline replay of cached (pair, shots) -> score records from a JSONL file."""

    scores: dict[tuple[str, str, int], int] = field(default_factory=dict)

    @staticmethod
    def load(path) -> "ScoreCache":
        cache = ScoreCache()
        path = Path(path)
        if path.exists():
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    record = json.loads(line)
                    key = (record["judge_id"], record["venture_id"], record["shots"])
                    cache.scores[key] = int(record["score"])
        return cache

    def get(self, judge_id: str, venture_id: str, shots: int) -> int:
        key = (judge_id, venture_id, shots)
        if key not in self.scores:
            raise LearnerUnavailableError(
                f"offline cache has no score for pair ({judge_id}, {venture_id}) at {shots} shots"
            )
        return self.scores[key]

    def put(self, judge_id: str, venture_id: str, shots: int, score: int) -> None:
        self.scores[(judge_id, venture_id, shots)] = score

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for (judge_id, venture_id, shots), score in sorted(self.scores.items()):
                fh.write(
                    json.dumps(
                        {
                            "judge_id": judge_id,
                            "venture_id": venture_id,
                            "shots": shots,
                            "score": score,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
