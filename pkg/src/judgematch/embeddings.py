"""Precomputed token-embedding ingestion and pooled/hybrid similarity scores."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import httpx
import numpy as np

from .corpus import Document
from .lexical import IdfTable

DEFAULT_SPECIAL_TOKENS = frozenset(
    {"[CLS]", "[SEP]", "[PAD]", "[MASK]", "[UNK]", "<s>", "</s>", "<pad>", "<unk>", "<mask>"}
)

MISMATCH_LIMIT = 0.20


class EmbeddingFormatError(ValueError):
    pass


class TokenizerMismatchError(ValueError):
    """IDF table and token embeddings were produced by different tokenizers."""


class MismatchRateError(ValueError):
    """Too many embedded tokens are missing from the idf table."""


@dataclass
class TokenEmbeddings:
    doc_id: str
    tokens: tuple[str, ...]
    matrix: np.ndarray  # d x L, column i embeds token i
    model_id: str
    tokenizer_id: str

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2:
            raise EmbeddingFormatError(f"{self.doc_id}: matrix must be 2-dimensional")
        if self.matrix.shape[1] != len(self.tokens):
            raise EmbeddingFormatError(
                f"{self.doc_id}: {self.matrix.shape[1]} embedding columns for {len(self.tokens)} tokens"
            )
        if len(self.tokens) and self.matrix.shape[0] < 1:
            raise EmbeddingFormatError(f"{self.doc_id}: embedding dimension must be positive")
        if not np.isfinite(self.matrix).all():
            raise EmbeddingFormatError(f"{self.doc_id}: non-finite embedding values")

    @property
    def length(self) -> int:
        return len(self.tokens)


@dataclass
class IdfWeights:
    values: np.ndarray  # length L, aligned to tokens
    source_table_id: str
    mismatch_count: int = 0
    mismatch_fraction: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)


@dataclass
class DocumentEmbedding:
    doc_id: str
    vector: np.ndarray
    pooling: str  # "plain_mean" | "idf_weighted"


def _parse_record(record: dict, special_tokens: frozenset[str]) -> TokenEmbeddings:
    doc_id = record.get("doc_id")
    if not doc_id:
        raise EmbeddingFormatError("record missing doc_id")
    tokens = tuple(record.get("tokens", ()))
    bad = [t for t in tokens if t in special_tokens]
    if bad:
        raise EmbeddingFormatError(f"{doc_id}: special tokens must be stripped by the provider: {sorted(set(bad))}")
    vectors = record.get("vectors", [])
    if len(vectors) != len(tokens):
        raise EmbeddingFormatError(f"{doc_id}: {len(vectors)} vectors for {len(tokens)} tokens")
    if tokens:
        widths = {len(v) for v in vectors}
        if len(widths) != 1:
            raise EmbeddingFormatError(f"{doc_id}: ragged embedding vectors {sorted(widths)}")
        matrix = np.asarray(vectors, dtype=np.float64).T
    else:
        matrix = np.zeros((0, 0))
    return TokenEmbeddings(
        doc_id=doc_id,
        tokens=tokens,
        matrix=matrix,
        model_id=record.get("model_id", ""),
        tokenizer_id=record.get("tokenizer_id", ""),
    )


def _check_uniform(records: dict[str, TokenEmbeddings], origin: str) -> None:
    model_ids = {te.model_id for te in records.values()}
    if len(model_ids) > 1:
        raise EmbeddingFormatError(f"{origin}: mixed model_id values {sorted(model_ids)}")
    tokenizer_ids = {te.tokenizer_id for te in records.values()}
    if len(tokenizer_ids) > 1:
        raise EmbeddingFormatError(f"{origin}: mixed tokenizer_id values {sorted(tokenizer_ids)}")


def load_embeddings(path, special_tokens: frozenset[str] = DEFAULT_SPECIAL_TOKENS) -> dict[str, TokenEmbeddings]:
    """Load per-document token embeddings from JSONL, keyed by doc_id."""
    records: dict[str, TokenEmbeddings] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            te = _parse_record(json.loads(line), special_tokens)
            if te.doc_id in records:
                raise EmbeddingFormatError(f"{te.doc_id}: duplicate doc_id in {path}")
            records[te.doc_id] = te
    if not records:
        warnings.warn(f"embedding file {path} contains no records")
        return records
    _check_uniform(records, str(path))
    return records


def fetch_embeddings(
    base_url: str,
    texts_by_id: dict[str, str],
    client: httpx.Client | None = None,
    special_tokens: frozenset[str] = DEFAULT_SPECIAL_TOKENS,
) -> dict[str, TokenEmbeddings]:
    """Fetch token embeddings from a provider endpoint (POST /embed) in file schema."""
    ids = sorted(texts_by_id)
    payload = {"doc_ids": ids, "texts": [texts_by_id[i] for i in ids]}
    own_client = client is None
    client = client or httpx.Client()
    try:
        response = client.post(base_url.rstrip("/") + "/embed", json=payload, timeout=60.0)
        response.raise_for_status()
        body = response.json()
    finally:
        if own_client:
            client.close()
    records = {}
    for record in body["records"]:
        te = _parse_record(record, special_tokens)
        records[te.doc_id] = te
    _check_uniform(records, base_url)
    return records


def embedding_document(te: TokenEmbeddings, role: str) -> Document:
    """View a token-embedding record as a Document for idf fitting over its tokenizer."""
    return Document(
        doc_id=te.doc_id,
        role=role,
        text=" ".join(te.tokens),
        tokens=te.tokens,
        word_count=len(te.tokens),
        track_ids=(),
        tokenizer_id=te.tokenizer_id,
    )


def align_idf(te: TokenEmbeddings, idf: IdfTable) -> IdfWeights:
    """Look up an idf weight per embedded token.

    Hard-fails on tokenizer disagreement and on out-of-vocabulary fractions
    above MISMATCH_LIMIT: a silent tokenization mismatch corrupts every hybrid
    score downstream, so it is made unrepresentable here.
    """
    if te.tokenizer_id != idf.tokenizer_id:
        raise TokenizerMismatchError(
            f"{te.doc_id}: embeddings tokenized with {te.tokenizer_id!r} but idf table "
            f"{idf.table_id!r} was fitted over {idf.tokenizer_id!r}"
        )
    values = np.empty(te.length, dtype=np.float64)
    mismatches = 0
    for i, token in enumerate(te.tokens):
        weight = idf.get(token)
        if weight is None:
            weight = idf.mean_idf
            mismatches += 1
        values[i] = weight
    fraction = mismatches / te.length if te.length else 0.0
    if fraction > MISMATCH_LIMIT:
        raise MismatchRateError(
            f"{te.doc_id}: {mismatches}/{te.length} tokens missing from idf table "
            f"{idf.table_id!r} ({fraction:.0%} > {MISMATCH_LIMIT:.0%})"
        )
    return IdfWeights(
        values=values,
        source_table_id=idf.table_id,
        mismatch_count=mismatches,
        mismatch_fraction=fraction,
    )


def pooled_embedding(te: TokenEmbeddings, weights: IdfWeights | None = None) -> DocumentEmbedding:
    """Document vector D = T w / ||w||_1 (plain mean when weights are uniform)."""
    if weights is None:
        w = np.ones(te.length, dtype=np.float64)
        pooling = "plain_mean"
    else:
        w = weights.values
        pooling = "idf_weighted"
        if len(w) != te.length:
            raise ValueError(f"{te.doc_id}: {len(w)} weights for {te.length} tokens")
        if np.any(w <= 0.0):
            raise ValueError(f"{te.doc_id}: idf weights must be positive")
    if te.length == 0:
        return DocumentEmbedding(doc_id=te.doc_id, vector=np.zeros(0), pooling=pooling)
    vector = te.matrix @ w / np.sum(w)
    return DocumentEmbedding(doc_id=te.doc_id, vector=vector, pooling=pooling)


def _cosine_dense(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return max(-1.0, min(1.0, float(np.dot(a, b)) / (na * nb)))


def doc_similarity_hybrid(
    te1: TokenEmbeddings,
    w1: IdfWeights,
    te2: TokenEmbeddings,
    w2: IdfWeights,
) -> float:
    """Cosine of idf-weighted mean-pooled document embeddings."""
    _check_pair(te1, te2)
    d1 = pooled_embedding(te1, w1)
    d2 = pooled_embedding(te2, w2)
    if d1.vector.size == 0 or d2.vector.size == 0:
        return 0.0
    return _cosine_dense(d1.vector, d2.vector)


def doc_similarity_plain(te1: TokenEmbeddings, te2: TokenEmbeddings) -> float:
    """Cosine of unweighted mean-pooled document embeddings."""
    _check_pair(te1, te2)
    d1 = pooled_embedding(te1)
    d2 = pooled_embedding(te2)
    if d1.vector.size == 0 or d2.vector.size == 0:
        return 0.0
    return _cosine_dense(d1.vector, d2.vector)


def _unit_columns(te: TokenEmbeddings) -> np.ndarray:
    norms = np.linalg.norm(te.matrix, axis=0)
    safe = np.where(norms == 0.0, 1.0, norms)
    return te.matrix / safe


def token_similarity_hybrid(
    te1: TokenEmbeddings,
    w1: IdfWeights,
    te2: TokenEmbeddings,
    w2: IdfWeights,
) -> float:
    """Mean over all token pairs of cos(T_i, T_j) * w_i * w_j.

    Factored form: sum_ij w1_i w2_j (u_i . u_j) = (U1 w1) . (U2 w2), so the
    score is linear in a uniform rescaling of either weight vector and is not
    bounded by [-1, 1].
    """
    _check_pair(te1, te2)
    if te1.length == 0 or te2.length == 0:
        return 0.0
    v1 = np.asarray(w1.values, dtype=np.float64)
    v2 = np.asarray(w2.values, dtype=np.float64)
    if len(v1) != te1.length or len(v2) != te2.length:
        raise ValueError("idf weight length does not match token count")
    if np.any(v1 <= 0.0) or np.any(v2 <= 0.0):
        raise ValueError("idf weights must be positive")
    z1 = _unit_columns(te1) @ v1
    z2 = _unit_columns(te2) @ v2
    return float(np.dot(z1, z2)) / (te1.length * te2.length)


def token_similarity_plain(te1: TokenEmbeddings, te2: TokenEmbeddings) -> float:
    """Mean over all token pairs of cos(T_i, T_j): the uniform-weight case."""
    _check_pair(te1, te2)
    if te1.length == 0 or te2.length == 0:
        return 0.0
    ones1 = IdfWeights(values=np.ones(te1.length), source_table_id="uniform")
    ones2 = IdfWeights(values=np.ones(te2.length), source_table_id="uniform")
    return token_similarity_hybrid(te1, ones1, te2, ones2)


def _check_pair(te1: TokenEmbeddings, te2: TokenEmbeddings) -> None:
    if te1.model_id != te2.model_id:
        raise ValueError(f"cannot compare embeddings from {te1.model_id!r} and {te2.model_id!r}")
