"""Ingest judge profiles and venture applications, sanitize text, compose canonical documents."""

from __future__ import annotations

import csv
import io
import json
import re
import unicodedata
from dataclasses import dataclass, field

import yaml

WHITESPACE_TOKENIZER = "whitespace"
MIN_JUDGE_WORDS = 50

_HTML_RE = re.compile(r"<[^>]*>")
_URL_RE = re.compile(r"(?:https?://|www\.)\S+")
_PUNCT_RE = re.compile(r"[^\w\s]|_")
_WS_RE = re.compile(r"\s+")


class IngestionError(ValueError):
    pass


class CompositionError(ValueError):
    pass


@dataclass(frozen=True)
class SchemaMap:
    """Which source columns feed a composed document, and in what order."""

    role: str  # "judge" | "venture"
    selected_fields: tuple[str, ...]
    join_separator: str = " "

    def __post_init__(self):
        if self.role not in ("judge", "venture"):
            raise ValueError(f"unknown role {self.role!r}")
        if not self.selected_fields:
            raise ValueError("selected_fields must be non-empty")
        if len(set(self.selected_fields)) != len(self.selected_fields):
            raise ValueError("selected_fields must be unique")

    @property
    def id_column(self) -> str:
        return "judge_id" if self.role == "judge" else "venture_id"


@dataclass
class JudgeProfile:
    judge_id: str
    text_fields: dict[str, str]
    bio: str = ""
    expertise_areas: list[str] = field(default_factory=list)
    industries: list[str] = field(default_factory=list)
    preferred_tracks: list[str] = field(default_factory=list)
    coi_venture_ids: list[str] = field(default_factory=list)
    supplemented: bool = False

    @property
    def doc_id(self) -> str:
        return f"judge:{self.judge_id}"


@dataclass
class VentureApplication:
    venture_id: str
    track: str
    text_fields: dict[str, str]

    @property
    def doc_id(self) -> str:
        return f"venture:{self.venture_id}"

    @property
    def pitch(self) -> str:
        return self.text_fields.get("pitch", "")

    @property
    def problem(self) -> str:
        return self.text_fields.get("problem", "")

    @property
    def solution(self) -> str:
        return self.text_fields.get("solution", "")

    @property
    def industry(self) -> str:
        return self.text_fields.get("industry", "")

    @property
    def extra_fields(self) -> dict[str, str]:
        named = {"pitch", "problem", "solution", "industry"}
        return {k: v for k, v in self.text_fields.items() if k not in named}


@dataclass(frozen=True)
class Document:
    doc_id: str
    role: str
    text: str
    tokens: tuple[str, ...]
    word_count: int
    track_ids: tuple[str, ...]
    tokenizer_id: str = WHITESPACE_TOKENIZER


@dataclass(frozen=True)
class MatchLabel:
    judge_id: str
    venture_id: str
    quality: int

    def __post_init__(self):
        if self.quality not in (1, 2, 3, 4, 5):
            raise ValueError(f"quality must be in 1..5, got {self.quality}")


@dataclass
class ProvenanceReport:
    """Audit trail for document composition: supplements, degenerate docs, dropped columns."""

    supplemented_judges: list[str] = field(default_factory=list)
    flagged: list[dict] = field(default_factory=list)
    dropped_columns: dict[str, list[str]] = field(default_factory=dict)

    def flag(self, doc_id: str, reason: str) -> None:
        self.flagged.append({"doc_id": doc_id, "reason": reason})

    def flagged_ids(self) -> set[str]:
        return {entry["doc_id"] for entry in self.flagged}

    def to_json(self) -> str:
        payload = {
            "supplemented_judges": sorted(self.supplemented_judges),
            "flagged": sorted(self.flagged, key=lambda e: (e["doc_id"], e["reason"])),
            "dropped_columns": {k: sorted(v) for k, v in sorted(self.dropped_columns.items())},
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _sanitize_once(text: str) -> str:
    text = unicodedata.normalize("NFC", text)
    text = text.lower()
    text = _HTML_RE.sub(" ", text)
    text = _URL_RE.sub(" ", text)
    text = _PUNCT_RE.sub(" ", text)
    return _WS_RE.sub(" ", text).strip()


def sanitize(raw: str) -> str:
    """Normalize text: NFC, lowercase, strip HTML/URLs/punctuation, collapse whitespace.

    Idempotent: sanitize(sanitize(x)) == sanitize(x).
    """
    text = _sanitize_once(raw)
    # lowercasing and NFC can interact (e.g. dotted capital I expands under lower());
    # iterate to a fixpoint so repeated sanitization is exactly stable
    for _ in range(8):
        nxt = _sanitize_once(text)
        if nxt == text:
            break
        text = nxt
    return text


def tokenize(text: str) -> tuple[str, ...]:
    return tuple(text.split())


def ingest(records: list[dict], schema: SchemaMap, tracks: list[str] | None = None):
    """Turn tabular rows into JudgeProfile or VentureApplication entities.

    Unselected columns are dropped; empty selected cells become empty strings.
    """
    if not records:
        return []
    headers = set(records[0].keys())
    missing = [c for c in schema.selected_fields if c not in headers]
    if missing:
        raise IngestionError(f"schema selects columns absent from input: {missing}")
    if schema.id_column not in headers:
        raise IngestionError(f"missing required id column {schema.id_column!r}")

    entities = []
    seen: dict[str, int] = {}
    duplicates = []
    for k, row in enumerate(records):
        entity_id = _cell(row, schema.id_column)
        if not entity_id:
            raise IngestionError(f"missing id at row {k}")
        if entity_id in seen:
            duplicates.append(entity_id)
            continue
        seen[entity_id] = k
        fields = {name: _cell(row, name) for name in schema.selected_fields}
        if schema.role == "judge":
            preferred = _split_multi(_cell(row, "preferred_tracks"))
            if not preferred:
                raise IngestionError(f"judge {entity_id!r} has no preferred tracks")
            entities.append(
                JudgeProfile(
                    judge_id=entity_id,
                    text_fields=fields,
                    bio=_cell(row, "bio"),
                    expertise_areas=_split_multi(_cell(row, "expertise_areas")),
                    industries=_split_multi(_cell(row, "industries")),
                    preferred_tracks=preferred,
                )
            )
        else:
            track = _cell(row, "track")
            if not track:
                raise IngestionError(f"venture {entity_id!r} has no track")
            if tracks is not None and track not in tracks:
                raise IngestionError(f"venture {entity_id!r} has unknown track {track!r}")
            entities.append(VentureApplication(venture_id=entity_id, track=track, text_fields=fields))
    if duplicates:
        raise IngestionError(f"duplicate {schema.id_column} values: {sorted(set(duplicates))}")
    return entities


def compose_document(entity, schema: SchemaMap, supplement: str | None = None) -> Document:
    """Join selected fields, sanitize, and (for short judge profiles) append the supplement."""
    is_judge = isinstance(entity, JudgeProfile)
    if supplement is not None and not is_judge:
        raise CompositionError("supplements apply to judges only")
    joined = schema.join_separator.join(entity.text_fields.get(name, "") for name in schema.selected_fields)
    text = sanitize(joined)
    word_count = len(text.split())
    supplemented = False
    if is_judge and word_count < MIN_JUDGE_WORDS and supplement:
        extra = sanitize(supplement)
        if extra:
            text = f"{text} {extra}".strip()
            supplemented = True
    if is_judge:
        entity.supplemented = supplemented
        track_ids = tuple(entity.preferred_tracks)
        role = "judge"
    else:
        track_ids = (entity.track,)
        role = "venture"
    tokens = tokenize(text)
    return Document(
        doc_id=entity.doc_id,
        role=role,
        text=text,
        tokens=tokens,
        word_count=len(tokens),
        track_ids=track_ids,
    )


def build_documents(
    judges: list[JudgeProfile],
    ventures: list[VentureApplication],
    judge_schema: SchemaMap,
    venture_schema: SchemaMap,
    supplements: dict[str, str] | None = None,
    report: ProvenanceReport | None = None,
) -> tuple[dict[str, Document], ProvenanceReport]:
    """Compose all documents, recording supplementation and degenerate docs."""
    supplements = supplements or {}
    report = report or ProvenanceReport()
    docs: dict[str, Document] = {}
    for judge in judges:
        doc = compose_document(judge, judge_schema, supplements.get(judge.judge_id))
        if judge.supplemented:
            report.supplemented_judges.append(judge.judge_id)
        elif doc.word_count < MIN_JUDGE_WORDS:
            report.flag(doc.doc_id, "below_minimum_no_supplement")
        if doc.word_count == 0:
            report.flag(doc.doc_id, "empty_document")
        docs[doc.doc_id] = doc
    for venture in ventures:
        doc = compose_document(venture, venture_schema)
        if doc.word_count == 0:
            report.flag(doc.doc_id, "empty_document")
        docs[doc.doc_id] = doc
    return docs, report


def dropped_columns(headers: list[str], schema: SchemaMap) -> list[str]:
    reserved = {schema.id_column, "track", "preferred_tracks", "bio", "expertise_areas", "industries"}
    return sorted(set(headers) - set(schema.selected_fields) - reserved)


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def read_csv_text(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def load_labels(path) -> list[MatchLabel]:
    rows = read_csv(path)
    labels = []
    seen = set()
    for k, row in enumerate(rows):
        judge_id = _cell(row, "judge_id")
        venture_id = _cell(row, "venture_id")
        if not judge_id or not venture_id:
            raise IngestionError(f"missing id at row {k} of label file")
        key = (judge_id, venture_id)
        if key in seen:
            raise IngestionError(f"duplicate label for pair {key}")
        seen.add(key)
        labels.append(MatchLabel(judge_id, venture_id, int(_cell(row, "quality"))))
    return labels


def load_supplements(path) -> dict[str, str]:
    rows = read_csv(path)
    return {_cell(r, "judge_id"): _cell(r, "text") for r in rows if _cell(r, "judge_id")}


@dataclass(frozen=True)
class CorpusConfig:
    tracks: tuple[str, ...]
    judge_schema: SchemaMap
    venture_schema: SchemaMap
    coi_pairs: frozenset[tuple[str, str]]


def parse_corpus_config(text: str) -> CorpusConfig:
    """Parse the declarative corpus config (YAML: tracks, schema maps, COI pairs)."""
    data = yaml.safe_load(text) or {}
    tracks = tuple(data.get("tracks", ()))
    if not tracks:
        raise ValueError("corpus config must list at least one track")

    def schema_for(role: str) -> SchemaMap:
        section = data.get(f"{role}s", {})
        return SchemaMap(
            role=role,
            selected_fields=tuple(section.get("selected_fields", ())),
            join_separator=section.get("join_separator", " "),
        )

    coi = frozenset((str(j), str(v)) for j, v in data.get("coi", ()))
    return CorpusConfig(
        tracks=tracks,
        judge_schema=schema_for("judge"),
        venture_schema=schema_for("venture"),
        coi_pairs=coi,
    )


def load_corpus_config(path) -> CorpusConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_corpus_config(fh.read())


def attach_coi(judges: list[JudgeProfile], coi_pairs) -> None:
    by_judge: dict[str, list[str]] = {}
    for judge_id, venture_id in sorted(coi_pairs):
        by_judge.setdefault(judge_id, []).append(venture_id)
    for judge in judges:
        judge.coi_venture_ids = by_judge.get(judge.judge_id, [])


def _cell(row: dict, name: str) -> str:
    value = row.get(name)
    return value.strip() if isinstance(value, str) else ""


def _split_multi(cell: str) -> list[str]:
    return [part.strip() for part in cell.split(";") if part.strip()]
