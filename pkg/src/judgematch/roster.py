"""Base-learner roster: turns learner specs into score matrices over judge-venture pairs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix

from . import embeddings as emb
from . import lexical
from .corpus import Document
from .ensemble import EnsembleModel, FeatureMatrix, build_feature_matrix
from .llm import LearnerUnavailableError, ScoreCache

TFIDF = "tfidf"
EMBEDDING_DOC = "embedding_doc"
EMBEDDING_TOKEN = "embedding_token"
HYBRID_DOC = "hybrid_doc"
HYBRID_TOKEN = "hybrid_token"
LLM = "llm"


@dataclass(frozen=True)
class LearnerSpec:
    learner_id: str
    kind: str
    variant: str = lexical.STANDARD  # tfidf only
    idf_scheme: str = lexical.SMOOTHED  # hybrid only
    background: bool = False
    model_id: str = ""  # embedding and hybrid kinds
    shots: int = 0  # llm only

    @staticmethod
    def from_dict(data: dict) -> "LearnerSpec":
        return LearnerSpec(
            learner_id=data["id"],
            kind=data["kind"],
            variant=data.get("variant", lexical.STANDARD),
            idf_scheme=data.get("idf_scheme", lexical.SMOOTHED),
            background=bool(data.get("background", False)),
            model_id=data.get("model_id", ""),
            shots=int(data.get("shots", 0)),
        )


def default_roster(model_ids) -> list[LearnerSpec]:
    """TF-IDF variants plus document/token and hybrid learners for each embedding model."""
    specs = [
        LearnerSpec("tfidf_standard", TFIDF, variant=lexical.STANDARD),
        LearnerSpec("tfidf_standard_bg", TFIDF, variant=lexical.STANDARD, background=True),
        LearnerSpec("tfidf_augmented", TFIDF, variant=lexical.AUGMENTED),
        LearnerSpec("tfidf_augmented_bg", TFIDF, variant=lexical.AUGMENTED, background=True),
    ]
    for model_id in model_ids:
        specs.append(LearnerSpec(f"emb_{model_id}_doc", EMBEDDING_DOC, model_id=model_id))
        specs.append(LearnerSpec(f"emb_{model_id}_tok", EMBEDDING_TOKEN, model_id=model_id))
        for level, kind in (("doc", HYBRID_DOC), ("tok", HYBRID_TOKEN)):
            for scheme in (lexical.SMOOTHED, lexical.NON_SMOOTHED):
                for background in (False, True):
                    suffix = f"{level}_{scheme}" + ("_bg" if background else "")
                    specs.append(
                        LearnerSpec(
                            f"hyb_{model_id}_{suffix}",
                            kind,
                            idf_scheme=scheme,
                            background=background,
                            model_id=model_id,
                        )
                    )
    return specs


@dataclass
class LearnerResources:
    documents: dict[str, Document]
    background: lexical.BackgroundCorpus | None = None
    embeddings: dict[str, dict[str, emb.TokenEmbeddings]] = field(default_factory=dict)
    embedding_background: dict[str, lexical.BackgroundCorpus] = field(default_factory=dict)
    llm_scores: ScoreCache | None = None


@dataclass
class _Representation:
    """Per-document score precursors for one learner: pair score is a dot product."""

    vectors: dict[str, np.ndarray]
    lengths: dict[str, int]
    degenerate: set[str]
    token_level: bool


class ScoreEngine:
    """Computes and caches per-learner document representations and pair scores."""

    def __init__(self, resources: LearnerResources):
        self.resources = resources
        self._tfidf_vectors: dict[LearnerSpec, dict[str, lexical.SparseVector]] = {}
        self._representations: dict[LearnerSpec, _Representation] = {}
        self._idf_tables: dict[tuple, lexical.IdfTable] = {}

    # -- idf fitting ---------------------------------------------------------

    def _corpus_idf(self, scheme: str, background: bool) -> lexical.IdfTable:
        key = ("corpus", scheme, background)
        if key not in self._idf_tables:
            docs = [self.resources.documents[k] for k in sorted(self.resources.documents)]
            docs = [d for d in docs if d.tokens]
            bg = None
            if background:
                bg = self.resources.background
                if bg is None:
                    raise ValueError("learner requires a background corpus but none was loaded")
            self._idf_tables[key] = lexical.fit_idf(docs, scheme=scheme, background=bg)
        return self._idf_tables[key]

    def _embedding_idf(self, model_id: str, scheme: str, background: bool) -> lexical.IdfTable:
        key = ("embedding", model_id, scheme, background)
        if key not in self._idf_tables:
            records = self._embedding_set(model_id)
            docs = [
                emb.embedding_document(records[k], role="judge" if k.startswith("judge:") else "venture")
                for k in sorted(records)
                if records[k].length
            ]
            bg = None
            if background:
                bg = self.resources.embedding_background.get(model_id)
                if bg is None:
                    raise ValueError(
                        f"learner requires background tokens for model {model_id!r} but none were loaded"
                    )
            self._idf_tables[key] = lexical.fit_idf(docs, scheme=scheme, background=bg)
        return self._idf_tables[key]

    def _embedding_set(self, model_id: str) -> dict[str, emb.TokenEmbeddings]:
        if model_id not in self.resources.embeddings:
            raise KeyError(f"no embeddings loaded for model {model_id!r}")
        return self.resources.embeddings[model_id]

    # -- representations -----------------------------------------------------

    def _tfidf_representation(self, spec: LearnerSpec) -> dict[str, lexical.SparseVector]:
        if spec not in self._tfidf_vectors:
            scheme = lexical.NON_SMOOTHED if spec.variant == lexical.AUGMENTED else lexical.SMOOTHED
            idf = self._corpus_idf(scheme, spec.background)
            self._tfidf_vectors[spec] = {
                doc_id: lexical.tfidf_vector(doc, idf, variant=spec.variant)
                for doc_id, doc in self.resources.documents.items()
            }
        return self._tfidf_vectors[spec]

    def _embedding_representation(self, spec: LearnerSpec) -> _Representation:
        if spec in self._representations:
            return self._representations[spec]
        records = self._embedding_set(spec.model_id)
        token_level = spec.kind in (EMBEDDING_TOKEN, HYBRID_TOKEN)
        if spec.kind in (HYBRID_DOC, HYBRID_TOKEN):
            idf = self._embedding_idf(spec.model_id, spec.idf_scheme, spec.background)
        else:
            idf = None
        vectors: dict[str, np.ndarray] = {}
        lengths: dict[str, int] = {}
        degenerate: set[str] = set()
        for doc_id, te in records.items():
            lengths[doc_id] = te.length
            if te.length == 0:
                degenerate.add(doc_id)
                continue
            if idf is None:
                weights = np.ones(te.length)
            else:
                weights = emb.align_idf(te, idf).values
            if token_level:
                norms = np.linalg.norm(te.matrix, axis=0)
                unit = te.matrix / np.where(norms == 0.0, 1.0, norms)
                vectors[doc_id] = unit @ weights
            else:
                pooled = te.matrix @ weights / np.sum(weights)
                norm = float(np.linalg.norm(pooled))
                if norm == 0.0:
                    degenerate.add(doc_id)
                    continue
                vectors[doc_id] = pooled / norm
        rep = _Representation(
            vectors=vectors, lengths=lengths, degenerate=degenerate, token_level=token_level
        )
        self._representations[spec] = rep
        return rep

    # -- scoring -------------------------------------------------------------

    def score_pair(self, spec: LearnerSpec, judge_doc_id: str, venture_doc_id: str) -> tuple[float, bool]:
        """(score, degenerate) for one pair."""
        if spec.kind == TFIDF:
            vectors = self._tfidf_representation(spec)
            a = vectors.get(judge_doc_id)
            b = vectors.get(venture_doc_id)
            if a is None or b is None or a.degenerate or b.degenerate:
                return 0.0, True
            return lexical.cosine(a, b), False
        if spec.kind == LLM:
            return self._llm_score(spec, judge_doc_id, venture_doc_id)
        rep = self._embedding_representation(spec)
        missing = {judge_doc_id, venture_doc_id} - set(rep.lengths)
        if missing or judge_doc_id in rep.degenerate or venture_doc_id in rep.degenerate:
            return 0.0, True
        zj = rep.vectors[judge_doc_id]
        zv = rep.vectors[venture_doc_id]
        score = float(np.dot(zj, zv))
        if rep.token_level:
            score /= rep.lengths[judge_doc_id] * rep.lengths[venture_doc_id]
        else:
            score = max(-1.0, min(1.0, score))
        return score, False

    def _llm_score(self, spec: LearnerSpec, judge_doc_id: str, venture_doc_id: str) -> tuple[float, bool]:
        cache = self.resources.llm_scores
        if cache is None:
            return 0.0, True
        judge_id = judge_doc_id.split(":", 1)[1]
        venture_id = venture_doc_id.split(":", 1)[1]
        try:
            return float(cache.get(judge_id, venture_id, spec.shots)), False
        except LearnerUnavailableError:
            return 0.0, True

    def score_matrix(
        self, spec: LearnerSpec, judge_doc_ids: list[str], venture_doc_ids: list[str]
    ) -> tuple[np.ndarray, np.ndarray]:
        """(scores, degenerate mask) over the full judge x venture grid, vectorized."""
        if spec.kind == TFIDF:
            return self._tfidf_matrix(spec, judge_doc_ids, venture_doc_ids)
        if spec.kind == LLM:
            scores = np.zeros((len(judge_doc_ids), len(venture_doc_ids)))
            degenerate = np.zeros_like(scores, dtype=bool)
            for j, judge in enumerate(judge_doc_ids):
                for v, venture in enumerate(venture_doc_ids):
                    scores[j, v], degenerate[j, v] = self._llm_score(spec, judge, venture)
            return scores, degenerate
        rep = self._embedding_representation(spec)
        dims = {v.shape[0] for v in rep.vectors.values()}
        dim = dims.pop() if dims else 1
        j_mat = np.zeros((len(judge_doc_ids), dim))
        v_mat = np.zeros((len(venture_doc_ids), dim))
        j_bad = np.zeros(len(judge_doc_ids), dtype=bool)
        v_bad = np.zeros(len(venture_doc_ids), dtype=bool)
        j_len = np.ones(len(judge_doc_ids))
        v_len = np.ones(len(venture_doc_ids))
        for i, doc_id in enumerate(judge_doc_ids):
            if doc_id in rep.vectors:
                j_mat[i] = rep.vectors[doc_id]
                j_len[i] = rep.lengths[doc_id]
            else:
                j_bad[i] = True
        for i, doc_id in enumerate(venture_doc_ids):
            if doc_id in rep.vectors:
                v_mat[i] = rep.vectors[doc_id]
                v_len[i] = rep.lengths[doc_id]
            else:
                v_bad[i] = True
        scores = j_mat @ v_mat.T
        if rep.token_level:
            scores /= np.outer(j_len, v_len)
        else:
            scores = np.clip(scores, -1.0, 1.0)
        degenerate = np.logical_or.outer(j_bad, v_bad)
        scores[degenerate] = 0.0
        return scores, degenerate

    def _tfidf_matrix(self, spec, judge_doc_ids, venture_doc_ids):
        vectors = self._tfidf_representation(spec)
        vocab: dict[str, int] = {}
        for doc_id in list(judge_doc_ids) + list(venture_doc_ids):
            vec = vectors.get(doc_id)
            if vec is None:
                continue
            for term in vec.weights:
                vocab.setdefault(term, len(vocab))

        def stack(doc_ids):
            rows, cols, vals = [], [], []
            bad = np.zeros(len(doc_ids), dtype=bool)
            for i, doc_id in enumerate(doc_ids):
                vec = vectors.get(doc_id)
                if vec is None or vec.degenerate:
                    bad[i] = True
                    continue
                for term, weight in vec.weights.items():
                    rows.append(i)
                    cols.append(vocab[term])
                    vals.append(weight)
            matrix = csr_matrix((vals, (rows, cols)), shape=(len(doc_ids), max(len(vocab), 1)))
            return matrix, bad

        j_mat, j_bad = stack(judge_doc_ids)
        v_mat, v_bad = stack(venture_doc_ids)
        scores = np.asarray((j_mat @ v_mat.T).todense())
        scores = np.clip(scores, -1.0, 1.0)
        degenerate = np.logical_or.outer(j_bad, v_bad)
        scores[degenerate] = 0.0
        return scores, degenerate


def feature_matrix_for_pairs(
    engine: ScoreEngine, specs: list[LearnerSpec], pairs: list[tuple[str, str]]
) -> FeatureMatrix:
    """Raw learner scores for labeled (judge_id, venture_id) pairs; degenerate cells imputed."""
    scores: dict[tuple[str, str], dict[str, float]] = {}
    degenerate: set[tuple[str, str, str]] = set()
    for judge_id, venture_id in pairs:
        row = {}
        for spec in specs:
            value, bad = engine.score_pair(spec, f"judge:{judge_id}", f"venture:{venture_id}")
            row[spec.learner_id] = value
            if bad:
                degenerate.add((judge_id, venture_id, spec.learner_id))
        scores[(judge_id, venture_id)] = row
    return build_feature_matrix([s.learner_id for s in specs], scores, degenerate)


def grid_predictions(
    engine: ScoreEngine,
    specs: list[LearnerSpec],
    model: EnsembleModel,
    judge_ids: list[str],
    venture_ids: list[str],
) -> dict[tuple[str, str], float]:
    """Calibrated ensemble similarity for every judge x venture pair (degenerate cells get column means)."""
    by_id = {spec.learner_id: spec for spec in specs}
    judge_docs = [f"judge:{j}" for j in judge_ids]
    venture_docs = [f"venture:{v}" for v in venture_ids]
    similarity = np.zeros((len(judge_ids), len(venture_ids)))
    for learner_id, weight in zip(model.learner_ids, model.weights):
        if learner_id not in by_id:
            raise KeyError(f"retained learner {learner_id!r} missing from roster")
        raw, degenerate = engine.score_matrix(by_id[learner_id], judge_docs, venture_docs)
        good = ~degenerate
        fill = float(raw[good].mean()) if good.any() else 0.0
        raw = np.where(degenerate, fill, raw)
        scale = model.scales[learner_id]
        span = scale.maximum - scale.minimum
        normalized = np.clip((raw - scale.minimum) / span, 0.0, 1.0) if span > 0 else np.zeros_like(raw)
        similarity += weight * normalized
    return {
        (judge_id, venture_id): float(similarity[j, v])
        for j, judge_id in enumerate(judge_ids)
        for v, venture_id in enumerate(venture_ids)
    }
