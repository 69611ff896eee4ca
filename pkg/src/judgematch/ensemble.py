"""Convex ensemble over base-learner scores: simplex regression, CV pruning, calibrated predictions."""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass

import numpy as np

PRUNE_THRESHOLD = 0.01
N_FOLDS = 5


class EnsembleError(ValueError):
    pass


@dataclass
class FeatureMatrix:
    """Raw base-learner scores for labeled pairs; rows sorted by pair id for order invariance."""

    learner_ids: tuple[str, ...]
    pair_ids: tuple[tuple[str, str], ...]
    values: np.ndarray  # rows x learners
    imputed: tuple[tuple[str, str, str], ...] = ()  # (judge_id, venture_id, learner_id)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.pair_ids), len(self.learner_ids)):
            raise EnsembleError(
                f"value matrix {self.values.shape} does not match "
                f"{len(self.pair_ids)} pairs x {len(self.learner_ids)} learners"
            )
        if not np.isfinite(self.values).all():
            raise EnsembleError("feature matrix contains non-finite scores")
        order = np.argsort(np.array([f"{j}||{v}" for j, v in self.pair_ids]))
        self.pair_ids = tuple(self.pair_ids[i] for i in order)
        self.values = self.values[order]

    def to_csv(self) -> str:
        lines = ["judge_id,venture_id," + ",".join(self.learner_ids)]
        for (judge_id, venture_id), row in zip(self.pair_ids, self.values):
            lines.append(f"{judge_id},{venture_id}," + ",".join(f"{x:.6f}" for x in row))
        return "\n".join(lines) + "\n"


def build_feature_matrix(
    learner_ids,
    scores: dict[tuple[str, str], dict[str, float]],
    degenerate: set[tuple[str, str, str]] | None = None,
) -> FeatureMatrix:
    """Assemble rows from per-pair learner scores, imputing degenerate cells with column means."""
    degenerate = degenerate or set()
    learner_ids = tuple(learner_ids)
    pair_ids = tuple(sorted(scores))
    values = np.empty((len(pair_ids), len(learner_ids)), dtype=np.float64)
    mask = np.zeros_like(values, dtype=bool)
    for r, pair in enumerate(pair_ids):
        row = scores[pair]
        for c, learner in enumerate(learner_ids):
            if learner not in row:
                raise EnsembleError(f"pair {pair} missing score for learner {learner!r}")
            values[r, c] = row[learner]
            if (pair[0], pair[1], learner) in degenerate:
                mask[r, c] = True
    imputed = []
    for c in range(len(learner_ids)):
        bad = mask[:, c]
        if bad.any():
            good = values[~bad, c]
            fill = float(np.mean(good)) if good.size else 0.0
            values[bad, c] = fill
            for r in np.flatnonzero(bad):
                imputed.append((pair_ids[r][0], pair_ids[r][1], learner_ids[c]))
    return FeatureMatrix(learner_ids=learner_ids, pair_ids=pair_ids, values=values, imputed=tuple(imputed))


@dataclass(frozen=True)
class LearnerScale:
    minimum: float
    maximum: float

    def apply(self, raw: float) -> float:
        if self.maximum <= self.minimum:
            return 0.0
        return min(1.0, max(0.0, (raw - self.minimum) / (self.maximum - self.minimum)))


@dataclass
class EnsembleModel:
    learner_ids: tuple[str, ...]
    weights: np.ndarray
    scales: dict[str, LearnerScale]
    seed: int = 0
    threshold: float = PRUNE_THRESHOLD

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if not self.learner_ids:
            raise EnsembleError("ensemble retained no learners")
        if abs(float(self.weights.sum()) - 1.0) > 1e-9 or float(self.weights.min()) < 0.0:
            raise EnsembleError("weights must be nonnegative and sum to one")

    def to_json(self) -> str:
        return json.dumps(
            {
                "learners": [
                    {
                        "id": lid,
                        "weight": float(w),
                        "scale_min": self.scales[lid].minimum,
                        "scale_max": self.scales[lid].maximum,
                    }
                    for lid, w in zip(self.learner_ids, self.weights)
                ],
                "seed": self.seed,
                "threshold": self.threshold,
            },
            indent=2,
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "EnsembleModel":
        data = json.loads(text)
        learners = data["learners"]
        return EnsembleModel(
            learner_ids=tuple(entry["id"] for entry in learners),
            weights=np.array([entry["weight"] for entry in learners]),
            scales={
                entry["id"]: LearnerScale(entry["scale_min"], entry["scale_max"]) for entry in learners
            },
            seed=data["seed"],
            threshold=data["threshold"],
        )


def scale_labels(labels) -> np.ndarray:
    """Map 1..5 quality labels onto [0, 1]."""
    y = np.asarray(labels, dtype=np.float64)
    return (y - 1.0) / 4.0


def quality_from_similarity(similarity: float) -> float:
    return 1.0 + 4.0 * similarity


def normalize_features(X: FeatureMatrix):
    """Min-max map each learner column to [0, 1]; constant columns are dropped with a warning."""
    keep = []
    scales: dict[str, LearnerScale] = {}
    for c, learner in enumerate(X.learner_ids):
        col = X.values[:, c]
        lo, hi = float(col.min()), float(col.max())
        if hi <= lo:
            warnings.warn(f"learner {learner!r} has a constant score column; dropped from ensemble fitting")
            continue
        keep.append(c)
        scales[learner] = LearnerScale(lo, hi)
    if not keep:
        raise EnsembleError("all learner columns are constant")
    cols = X.values[:, keep]
    mins = cols.min(axis=0)
    maxs = cols.max(axis=0)
    normalized = (cols - mins) / (maxs - mins)
    reduced = FeatureMatrix(
        learner_ids=tuple(X.learner_ids[c] for c in keep),
        pair_ids=X.pair_ids,
        values=normalized,
        imputed=X.imputed,
    )
    return reduced, scales


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    n = v.size
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.flatnonzero(u * np.arange(1, n + 1) > (css - 1.0))[-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def fit_simplex_weights(X: np.ndarray, y: np.ndarray, tol: float = 1e-9, max_iter: int = 100_000) -> np.ndarray:
    """argmin_{w in simplex} ||Xw - y||^2 by projected gradient with fixed 1/L step."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.size == 0:
        raise EnsembleError("empty feature matrix")
    n, k = X.shape
    if len(y) != n:
        raise EnsembleError(f"{n} rows but {len(y)} labels")
    gram = X.T @ X
    xty = X.T @ y
    lipschitz = float(np.linalg.eigvalsh(gram)[-1])
    if lipschitz <= 0.0:
        return np.full(k, 1.0 / k)
    step = 1.0 / lipschitz
    w = np.full(k, 1.0 / k)
    obj = float(w @ gram @ w - 2.0 * xty @ w + y @ y)
    for _ in range(max_iter):
        grad = 2.0 * (gram @ w - xty)
        w_next = project_simplex(w - step * grad)
        obj_next = float(w_next @ gram @ w_next - 2.0 * xty @ w_next + y @ y)
        move = float(np.max(np.abs(w_next - w)))
        w = w_next
        if obj - obj_next < tol * 1e-3 and move < 1e-12:
            obj = obj_next
            break
        obj = obj_next
    w = np.maximum(w, 0.0)
    total = float(w.sum())
    if total <= 0.0:
        raise EnsembleError("simplex projection collapsed to zero")
    return w / total


def fold_of(pair_id: tuple[str, str], folds: int, seed: int) -> int:
    """Deterministic fold keyed by pair id hash, independent of row order."""
    digest = hashlib.sha256(f"{seed}:{pair_id[0]}||{pair_id[1]}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % folds


def cross_validate_prune(
    X: FeatureMatrix,
    labels,
    folds: int = N_FOLDS,
    threshold: float = PRUNE_THRESHOLD,
    seed: int = 0,
) -> EnsembleModel:
    """Retain learners whose weight exceeds the threshold in every fold, then refit on all rows.

    `labels` maps (judge_id, venture_id) to a 1..5 quality score, or is a
    sequence aligned with X.pair_ids (which are sorted at construction).
    """
    if len(X.pair_ids) < folds:
        raise EnsembleError(f"need at least {folds} labeled rows for {folds}-fold validation")
    if hasattr(labels, "keys"):
        try:
            raw = [labels[pair] for pair in X.pair_ids]
        except KeyError as exc:
            raise EnsembleError(f"missing label for pair {exc.args[0]}") from exc
    else:
        raw = list(labels)
        if len(raw) != len(X.pair_ids):
            raise EnsembleError("label count does not match feature rows")
    y = scale_labels(raw)

    normalized, scales = normalize_features(X)
    assignments = np.array([fold_of(pair, folds, seed) for pair in normalized.pair_ids])
    surviving = np.ones(len(normalized.learner_ids), dtype=bool)
    for fold in range(folds):
        train = assignments != fold
        if not train.any():
            continue
        w = fit_simplex_weights(normalized.values[train], y[train])
        surviving &= w > threshold
    if not surviving.any():
        raise EnsembleError(
            f"no learner kept weight > {threshold} in every fold; relax the pruning threshold"
        )
    retained = tuple(lid for lid, keep in zip(normalized.learner_ids, surviving) if keep)
    final = fit_simplex_weights(normalized.values[:, surviving], y)
    return EnsembleModel(
        learner_ids=retained,
        weights=final,
        scales={lid: scales[lid] for lid in retained},
        seed=seed,
        threshold=threshold,
    )


def predict(model: EnsembleModel, raw_scores: dict[str, float]) -> tuple[float, float]:
    """Calibrated (similarity, quality) from raw retained-learner scores."""
    normalized = []
    for learner in model.learner_ids:
        if learner not in raw_scores:
            raise EnsembleError(f"missing score for retained learner {learner!r}")
        normalized.append(model.scales[learner].apply(raw_scores[learner]))
    similarity = float(np.dot(model.weights, np.asarray(normalized)))
    return similarity, quality_from_similarity(similarity)
