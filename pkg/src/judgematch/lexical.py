"""TF-IDF base learners: smoothed and augmented IDF schemes, sparse cosine similarity."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Document, sanitize, tokenize, WHITESPACE_TOKENIZER

SMOOTHED = "smoothed"
NON_SMOOTHED = "non_smoothed"
STANDARD = "standard"
AUGMENTED = "augmented"


@dataclass(frozen=True)
class BackgroundCorpus:
    """Supplementary documents that widen the IDF fitting corpus (e.g. an encyclopedia dump)."""

    docs: tuple[tuple[str, ...], ...]
    tokenizer_id: str = WHITESPACE_TOKENIZER

    @property
    def count(self) -> int:
        return len(self.docs)

    @staticmethod
    def from_texts(texts: Sequence[str]) -> "BackgroundCorpus":
        return BackgroundCorpus(docs=tuple(tokenize(sanitize(t)) for t in texts))


def load_background_jsonl(path) -> BackgroundCorpus:
    """JSONL background corpus: {"id": ..., "text": ...} per line."""
    texts = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                texts.append(json.loads(line)["text"])
    return BackgroundCorpus.from_texts(texts)


def load_background_dir(path) -> BackgroundCorpus:
    files = sorted(Path(path).glob("*.txt"))
    return BackgroundCorpus.from_texts([f.read_text(encoding="utf-8") for f in files])


def load_background_tokens_jsonl(path) -> BackgroundCorpus:
    """Pre-tokenized background corpus: {"doc_id", "tokenizer_id", "tokens"} per line.

    Used when the IDF table must align with a transformer tokenizer the engine
    cannot run itself.
    """
    docs = []
    tokenizer_ids = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            docs.append(tuple(record["tokens"]))
            tokenizer_ids.add(record["tokenizer_id"])
    if len(tokenizer_ids) > 1:
        raise ValueError(f"mixed tokenizer_id in background token file: {sorted(tokenizer_ids)}")
    tokenizer_id = tokenizer_ids.pop() if tokenizer_ids else WHITESPACE_TOKENIZER
    return BackgroundCorpus(docs=tuple(docs), tokenizer_id=tokenizer_id)


@dataclass
class IdfTable:
    weights: dict[str, float]
    scheme: str
    corpus_size: int
    includes_background: bool
    tokenizer_id: str = WHITESPACE_TOKENIZER
    table_id: str = ""
    max_idf: float = field(init=False, default=0.0)
    mean_idf: float = field(init=False, default=0.0)

    def __post_init__(self):
        if self.scheme not in (SMOOTHED, NON_SMOOTHED):
            raise ValueError(f"unknown idf scheme {self.scheme!r}")
        if self.weights:
            values = list(self.weights.values())
            self.max_idf = max(values)
            self.mean_idf = sum(values) / len(values)
        if not self.table_id:
            self.table_id = f"idf-{self.scheme}-{self.tokenizer_id}-n{self.corpus_size}"

    def idf(self, term: str) -> float:
        """Weight for a term; unseen terms get the table's maximum idf."""
        return self.weights.get(term, self.max_idf)

    def get(self, term: str):
        return self.weights.get(term)

    def to_json(self) -> str:
        return json.dumps(
            {
                "scheme": self.scheme,
                "corpus_size": self.corpus_size,
                "includes_background": self.includes_background,
                "tokenizer_id": self.tokenizer_id,
                "table_id": self.table_id,
                "weights": dict(sorted(self.weights.items())),
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "IdfTable":
        data = json.loads(text)
        return IdfTable(
            weights=data["weights"],
            scheme=data["scheme"],
            corpus_size=data["corpus_size"],
            includes_background=data["includes_background"],
            tokenizer_id=data["tokenizer_id"],
            table_id=data["table_id"],
        )


@dataclass(frozen=True)
class SparseVector:
    weights: dict[str, float]
    degenerate: bool = False


def fit_idf(
    corpus: Sequence[Document],
    scheme: str = SMOOTHED,
    background: BackgroundCorpus | None = None,
) -> IdfTable:
    """Count document frequencies over corpus (+ background) and derive idf weights.

    smoothed:     idf(t) = ln((1+N)/(1+df(t))) + 1
    non_smoothed: idf(t) = ln(N/df(t))
    """
    if not corpus:
        raise ValueError("cannot fit idf on an empty corpus")
    tokenizer_ids = {doc.tokenizer_id for doc in corpus}
    if len(tokenizer_ids) > 1:
        raise ValueError(f"corpus mixes tokenizers: {sorted(tokenizer_ids)}")
    tokenizer_id = tokenizer_ids.pop()
    if background is not None and background.count and background.tokenizer_id != tokenizer_id:
        raise ValueError(
            f"background tokenizer {background.tokenizer_id!r} does not match corpus tokenizer {tokenizer_id!r}"
        )

    df: dict[str, int] = {}
    token_sets = [set(doc.tokens) for doc in corpus]
    if background is not None:
        token_sets.extend(set(doc) for doc in background.docs)
    for terms in token_sets:
        for term in terms:
            df[term] = df.get(term, 0) + 1
    n_docs = len(token_sets)

    if scheme == SMOOTHED:
        weights = {t: math.log((1 + n_docs) / (1 + d)) + 1.0 for t, d in df.items()}
    elif scheme == NON_SMOOTHED:
        weights = {t: math.log(n_docs / d) for t, d in df.items()}
    else:
        raise ValueError(f"unknown idf scheme {scheme!r}")
    return IdfTable(
        weights=weights,
        scheme=scheme,
        corpus_size=n_docs,
        includes_background=background is not None and background.count > 0,
        tokenizer_id=tokenizer_id,
    )


def tfidf_vector(doc: Document, idf: IdfTable, variant: str = STANDARD) -> SparseVector:
    """TF-IDF vector of a document, L2-normalized.

    standard:  weight(t) = count(t) * idf(t)
    augmented: weight(t) = (0.5 + 0.5 * count(t)/max_count) * idf(t), non-smoothed idf only
    """
    if doc.tokenizer_id != idf.tokenizer_id:
        raise ValueError(f"document tokenizer {doc.tokenizer_id!r} does not match idf table {idf.tokenizer_id!r}")
    if variant == AUGMENTED and idf.scheme != NON_SMOOTHED:
        raise ValueError("augmented tf-idf requires a non-smoothed idf table")
    counts: dict[str, int] = {}
    for token in doc.tokens:
        counts[token] = counts.get(token, 0) + 1
    if not counts:
        return SparseVector(weights={}, degenerate=True)

    if variant == STANDARD:
        raw = {t: c * idf.idf(t) for t, c in counts.items()}
    elif variant == AUGMENTED:
        max_count = max(counts.values())
        raw = {t: (0.5 + 0.5 * c / max_count) * idf.idf(t) for t, c in counts.items()}
    else:
        raise ValueError(f"unknown tf-idf variant {variant!r}")

    raw = {t: w for t, w in raw.items() if w != 0.0}
    norm = math.sqrt(sum(w * w for w in raw.values()))
    if norm == 0.0:
        return SparseVector(weights={}, degenerate=True)
    return SparseVector(weights={t: w / norm for t, w in raw.items()})


def cosine(a, b) -> float:
    """Cosine similarity for sparse or dense vectors; zero input scores 0."""
    if isinstance(a, SparseVector) and isinstance(b, SparseVector):
        wa, wb = a.weights, b.weights
        if not wa or not wb:
            return 0.0
        if len(wb) < len(wa):
            wa, wb = wb, wa
        dot = sum(w * wb[t] for t, w in wa.items() if t in wb)
        na = math.sqrt(sum(w * w for w in a.weights.values()))
        nb = math.sqrt(sum(w * w for w in b.weights.values()))
        if na == 0.0 or nb == 0.0:
            return 0.0
        return _clamp(dot / (na * nb))
    va = np.asarray(a, dtype=float)
    vb = np.asarray(b, dtype=float)
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return _clamp(float(np.dot(va, vb)) / (na * nb))


def _clamp(value: float) -> float:
    return max(-1.0, min(1.0, value))
