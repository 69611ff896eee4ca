"""Cohort comparison statistics: overlap-adjusted Mann-Whitney, weighted AUC, permutation test."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.stats import kendalltau

VARIANCE_FLOOR = 1e-3
DEFAULT_RESAMPLES = 5000
SCORE_VALUES = (1, 2, 3, 4, 5)


@dataclass
class CohortScores:
    """Per-venture score sets: algorithm-only (A), manual-only (M), and overlap (O)."""

    ventures: dict[str, dict[str, list[int]]] = field(default_factory=dict)

    def add(self, venture_id: str, source: str, score: int) -> None:
        if score not in SCORE_VALUES:
            raise ValueError(f"score must be in 1..5, got {score}")
        bucket = {"algorithmic": "A", "manual": "M", "both": "O"}.get(source)
        if bucket is None:
            raise ValueError(f"unknown source {source!r} (expected manual, algorithmic, or both)")
        entry = self.ventures.setdefault(venture_id, {"A": [], "M": [], "O": []})
        entry[bucket].append(score)

    def venture_ids(self) -> list[str]:
        return sorted(self.ventures)


@dataclass
class VentureStat:
    venture_id: str
    u: float
    u_overlap: float
    v_max: float
    t: float
    variance: float
    included: bool

    def to_dict(self) -> dict:
        return {
            "venture_id": self.venture_id,
            "u": self.u,
            "u_overlap": self.u_overlap,
            "v_max": self.v_max,
            "t": self.t if self.included else None,
            "variance": self.variance,
            "included": self.included,
        }


@dataclass
class TestResult:
    auc: float
    p_value: float
    n_resamples: int
    seed: int
    per_venture: list[VentureStat]

    def to_json(self) -> str:
        return json.dumps(
            {
                "auc": round(self.auc, 6),
                "p": round(self.p_value, 6),
                "n_resamples": self.n_resamples,
                "seed": self.seed,
                "per_venture": [s.to_dict() for s in self.per_venture if s.included],
                "excluded_ventures": [s.venture_id for s in self.per_venture if not s.included],
            },
            indent=2,
            sort_keys=True,
        )


def mw_h(x: int, y: int) -> float:
    """Mann-Whitney score: 1 if x beats y, 1/2 on a tie, 0 otherwise."""
    if x > y:
        return 1.0
    if x == y:
        return 0.5
    return 0.0


def _counts(scores) -> np.ndarray:
    counts = np.zeros(len(SCORE_VALUES), dtype=np.int64)
    for s in scores:
        counts[s - 1] += 1
    return counts


def _u2_from_counts(cx, cy) -> int:
    # 2U = sum_{s>t} 2 cx[s] cy[t] + sum_s cx[s] cy[s], an exact integer
    total = 0
    below = 0
    for s in range(len(SCORE_VALUES)):
        total += 2 * int(cx[s]) * below + int(cx[s]) * int(cy[s])
        below += int(cy[s])
    return total


def _u_from_counts(cx, cy) -> float:
    return _u2_from_counts(cx, cy) / 2.0


def venture_statistic(a_scores, m_scores, o_scores, venture_id: str = "") -> VentureStat:
    """Overlap-adjusted per-venture statistic T = (U - U_overlap) / V.

    U compares A+overlap against M+overlap; the overlap self-comparison term is
    subtracted so shared assignments are not double counted. V is the maximum
    attainable adjusted statistic; when it is zero the venture is excluded.
    With no overlap this reduces to the standard AUC U / (n_A * n_M).
    """
    a_scores = list(a_scores)
    m_scores = list(m_scores)
    o_scores = list(o_scores)
    if not (a_scores or m_scores or o_scores):
        raise ValueError("venture has no scores")
    n_a, n_m, n_o = len(a_scores), len(m_scores), len(o_scores)
    o_counts = _counts(o_scores)
    u = _u_from_counts(_counts(a_scores) + o_counts, _counts(m_scores) + o_counts)
    u_overlap = _u_from_counts(o_counts, o_counts)
    v_max = float((n_a + n_o) * (n_m + n_o) - n_o * n_o)
    included = v_max > 0.0
    t = (u - u_overlap) / v_max if included else 0.0

    pooled = a_scores + m_scores + o_scores
    n = len(pooled)
    total = sum(pooled)
    total_sq = sum(s * s for s in pooled)
    # population variance as a single rounding of the exact integer ratio
    variance = (n * total_sq - total * total) / (n * n)
    return VentureStat(
        venture_id=venture_id,
        u=u,
        u_overlap=u_overlap,
        v_max=v_max,
        t=t,
        variance=variance,
        included=included,
    )


def cohort_statistics(cohort: CohortScores) -> list[VentureStat]:
    return [
        venture_statistic(entry["A"], entry["M"], entry["O"], venture_id=venture_id)
        for venture_id, entry in sorted(cohort.ventures.items())
    ]


def weighted_auc(stats: list[VentureStat], variance_floor: float = VARIANCE_FLOOR) -> float:
    """Inverse-variance weighted mean of included per-venture statistics."""
    included = [s for s in stats if s.included]
    if not included:
        raise ValueError("no included ventures; cannot form the weighted statistic")
    weights = np.array([1.0 / max(s.variance, variance_floor) for s in included])
    values = np.array([s.t for s in included])
    return float(np.dot(weights, values) / weights.sum())


def permutation_test(
    cohort: CohortScores,
    n_resamples: int = DEFAULT_RESAMPLES,
    seed: int = 0,
    variance_floor: float = VARIANCE_FLOOR,
) -> TestResult:
    """Two-tailed permutation test of the weighted AUC.

    Within each venture the non-overlap scores are pooled and randomly
    relabeled (overlap scores stay fixed); resample j draws from an
    independent generator seeded with seed XOR j so parallel evaluation
    keeps the same stream per index.
    """
    stats = cohort_statistics(cohort)
    if not any(s.included for s in stats):
        raise ValueError("no included ventures; cannot run the permutation test")
    included = [s for s in stats if s.included]

    # Scores are half-integers and variances are integer ratios, so the whole
    # two-sided comparison runs in exact rational arithmetic: mathematically
    # tied deviations around 1/2 are classified as ties on every platform.
    floor = Fraction(variance_floor).limit_denominator(10**9)
    ventures = []
    weights = []
    for stat in included:
        entry = cohort.ventures[stat.venture_id]
        pooled = entry["A"] + entry["M"] + entry["O"]
        n = len(pooled)
        total = sum(pooled)
        total_sq = sum(s * s for s in pooled)
        variance = Fraction(n * total_sq - total * total, n * n)
        weight = 1 / max(variance, floor)
        weights.append(weight)
        ventures.append(
            {
                "n_a": len(entry["A"]),
                "pool": _counts(entry["A"] + entry["M"]),
                "a_counts": _counts(entry["A"]),
                "o_counts": _counts(entry["O"]),
                "u2_overlap": _u2_from_counts(_counts(entry["O"]), _counts(entry["O"])),
                "coef": weight / Fraction(int(stat.v_max)),
            }
        )
    weight_total = sum(weights)

    def weighted_numerator(a_counts_per_venture) -> Fraction:
        # 2W T = sum_i (w_i/V_i)(2U_i - 2U_i^o), exact
        acc = Fraction(0)
        for venture, a_counts in zip(ventures, a_counts_per_venture):
            cx = a_counts + venture["o_counts"]
            cy = (venture["pool"] - a_counts) + venture["o_counts"]
            acc += venture["coef"] * (_u2_from_counts(cx, cy) - venture["u2_overlap"])
        return acc

    def deviation(a_counts_per_venture) -> Fraction:
        # |2W (T - 1/2)|; same ordering as 2W|T - 1/2| since W > 0
        return abs(weighted_numerator(a_counts_per_venture) - weight_total)

    observed_numerator = weighted_numerator([venture["a_counts"] for venture in ventures])
    observed_dev = abs(observed_numerator - weight_total)
    observed_t = float(observed_numerator / (2 * weight_total))

    extreme = 0
    for j in range(1, n_resamples + 1):
        rng = np.random.default_rng(seed ^ j)
        draws = [
            rng.multivariate_hypergeometric(venture["pool"], venture["n_a"]) for venture in ventures
        ]
        if deviation(draws) >= observed_dev:
            extreme += 1
    p_value = (1 + extreme) / (1 + n_resamples)
    return TestResult(
        auc=observed_t,
        p_value=p_value,
        n_resamples=n_resamples,
        seed=seed,
        per_venture=stats,
    )


def kendall_tau_b(x, y) -> tuple[float, float]:
    """Kendall tau-b with tie correction; two-sided p from the normal approximation."""
    x = list(x)
    y = list(y)
    if len(x) != len(y):
        raise ValueError("score lists must have equal length")
    if len(x) < 2:
        raise ValueError("need at least two paired scores")
    if len(set(x)) < 2 or len(set(y)) < 2:
        raise ValueError("tau-b is undefined for constant score lists")
    result = kendalltau(x, y, variant="b", method="asymptotic", alternative="two-sided")
    return float(result.statistic), float(result.pvalue)


def parse_scores_csv(text: str) -> CohortScores:
    """CSV of (judge_id, venture_id, source, score) with source in {manual, algorithmic, both}."""
    cohort = CohortScores()
    for row in csv.DictReader(io.StringIO(text)):
        cohort.add(row["venture_id"].strip(), row["source"].strip(), int(row["score"]))
    return cohort


def load_scores_csv(path) -> CohortScores:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_scores_csv(fh.read())
