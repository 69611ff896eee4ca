"""Max-min fair judge-venture assignment under panel, load, track, and COI constraints."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

DEFAULT_PANEL_SIZE = 12
DEFAULT_LOAD_MAX = 7
SIMILARITY_RESOLUTION = 1e-6  # scores are discretized to this grid before optimization


class InfeasibleAssignmentError(ValueError):
    def __init__(self, message: str, certificate: dict):
        super().__init__(message)
        self.certificate = certificate


@dataclass(frozen=True)
class ConstraintSet:
    venture_panel_size: int = DEFAULT_PANEL_SIZE
    judge_load_max: int = DEFAULT_LOAD_MAX
    track_eligibility: dict[str, frozenset[str]] = field(default_factory=dict)  # venture -> judges
    coi_pairs: frozenset[tuple[str, str]] = frozenset()

    def __post_init__(self):
        if self.venture_panel_size < 1:
            raise ValueError("venture_panel_size must be >= 1")
        if self.judge_load_max < 1:
            raise ValueError("judge_load_max must be >= 1")


def constraints_from_entities(
    judges,
    ventures,
    coi_pairs=frozenset(),
    panel_size: int = DEFAULT_PANEL_SIZE,
    load_max: int = DEFAULT_LOAD_MAX,
) -> ConstraintSet:
    """Derive track eligibility from judge preferred tracks and venture tracks."""
    eligibility = {}
    for venture in ventures:
        eligible = frozenset(j.judge_id for j in judges if venture.track in j.preferred_tracks)
        eligibility[venture.venture_id] = eligible
    return ConstraintSet(
        venture_panel_size=panel_size,
        judge_load_max=load_max,
        track_eligibility=eligibility,
        coi_pairs=frozenset(tuple(p) for p in coi_pairs),
    )


@dataclass
class SimilarityGrid:
    judge_ids: tuple[str, ...]
    venture_ids: tuple[str, ...]
    similarities: np.ndarray  # judges x ventures
    eligible: np.ndarray  # bool, judges x ventures

    def __post_init__(self):
        self.similarities = np.asarray(self.similarities, dtype=np.float64)
        self.eligible = np.asarray(self.eligible, dtype=bool)
        shape = (len(self.judge_ids), len(self.venture_ids))
        if self.similarities.shape != shape or self.eligible.shape != shape:
            raise ValueError("grid shapes do not match id lists")
        self._judge_index = {judge_id: i for i, judge_id in enumerate(self.judge_ids)}
        self._venture_index = {venture_id: i for i, venture_id in enumerate(self.venture_ids)}

    def similarity(self, judge_id: str, venture_id: str) -> float:
        return float(self.similarities[self._judge_index[judge_id], self._venture_index[venture_id]])

    def is_eligible(self, judge_id: str, venture_id: str) -> bool:
        return bool(self.eligible[self._judge_index[judge_id], self._venture_index[venture_id]])


@dataclass
class Assignment:
    pairs: frozenset[tuple[str, str]]  # (judge_id, venture_id)
    venture_quality: dict[str, float]

    def judges_of(self, venture_id: str) -> list[str]:
        return sorted(j for j, v in self.pairs if v == venture_id)

    def ventures_of(self, judge_id: str) -> list[str]:
        return sorted(v for j, v in self.pairs if j == judge_id)

    @property
    def min_quality(self) -> float:
        return min(self.venture_quality.values()) if self.venture_quality else 0.0

    def total_similarity(self, grid: SimilarityGrid) -> float:
        return float(sum(grid.similarity(j, v) for j, v in self.pairs))


@dataclass(frozen=True)
class Violation:
    kind: str  # "panel_size" | "load_max" | "ineligible_pair"
    judge_id: str | None
    venture_id: str | None
    observed: float
    required: float

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "judge_id": self.judge_id,
            "venture_id": self.venture_id,
            "observed": self.observed,
            "required": self.required,
        }


def build_grid(predictions: dict[tuple[str, str], float], constraints: ConstraintSet) -> SimilarityGrid:
    """Arrange predictions on a judge x venture grid, marking COI and cross-track cells ineligible."""
    judges = {j for j, _ in predictions}
    for eligible_judges in constraints.track_eligibility.values():
        judges |= eligible_judges
    judge_ids = tuple(sorted(judges))
    venture_ids = tuple(sorted({v for _, v in predictions} | set(constraints.track_eligibility)))
    sims = np.zeros((len(judge_ids), len(venture_ids)))
    eligible = np.zeros_like(sims, dtype=bool)
    j_index = {j: i for i, j in enumerate(judge_ids)}
    v_index = {v: i for i, v in enumerate(venture_ids)}
    for venture_id in venture_ids:
        track_ok = constraints.track_eligibility.get(venture_id, frozenset(judge_ids))
        for judge_id in judge_ids:
            if judge_id not in track_ok:
                continue
            if (judge_id, venture_id) in constraints.coi_pairs:
                continue
            pair = (judge_id, venture_id)
            if pair not in predictions:
                raise ValueError(f"missing prediction for eligible pair {pair}")
            eligible[j_index[judge_id], v_index[venture_id]] = True
            sims[j_index[judge_id], v_index[venture_id]] = predictions[pair]
    deficient = [
        {"venture_id": v, "eligible_judges": int(eligible[:, i].sum())}
        for i, v in enumerate(venture_ids)
        if int(eligible[:, i].sum()) < constraints.venture_panel_size
    ]
    if deficient:
        names = ", ".join(d["venture_id"] for d in deficient)
        raise InfeasibleAssignmentError(
            f"ventures with fewer than {constraints.venture_panel_size} eligible judges: {names}",
            certificate={"deficient_ventures": deficient},
        )
    return SimilarityGrid(judge_ids=judge_ids, venture_ids=venture_ids, similarities=sims, eligible=eligible)


def check_flow_feasibility(grid: SimilarityGrid, constraints: ConstraintSet) -> None:
    """Max-flow feasibility check; raises with a deficient-venture certificate on failure.

    Network: source -> judges (load cap), judge -> venture (eligible, cap 1),
    ventures -> sink (panel size). Feasible iff the max flow saturates every
    venture edge.
    """
    n_j = len(grid.judge_ids)
    n_v = len(grid.venture_ids)
    source, sink = 0, 1 + n_j + n_v
    rows, cols, caps = [], [], []
    for j in range(n_j):
        rows.append(source)
        cols.append(1 + j)
        caps.append(constraints.judge_load_max)
    for j in range(n_j):
        for v in range(n_v):
            if grid.eligible[j, v]:
                rows.append(1 + j)
                cols.append(1 + n_j + v)
                caps.append(1)
    for v in range(n_v):
        rows.append(1 + n_j + v)
        cols.append(sink)
        caps.append(constraints.venture_panel_size)
    graph = csr_matrix((caps, (rows, cols)), shape=(sink + 1, sink + 1), dtype=np.int32)
    result = maximum_flow(graph, source, sink)
    needed = constraints.venture_panel_size * n_v
    if result.flow_value >= needed:
        return
    # Hall violator: close the unsaturated ventures over their eligible judges
    # and everything those judges already serve; that set provably cannot be filled.
    flow = result.flow
    deficient_set = {
        v for v in range(n_v) if flow[1 + n_j + v, sink] < constraints.venture_panel_size
    }
    changed = True
    while changed:
        changed = False
        frontier_judges = {
            j for j in range(n_j) for v in deficient_set if grid.eligible[j, v]
        }
        for j in frontier_judges:
            for v in range(n_v):
                if v not in deficient_set and flow[1 + j, 1 + n_j + v] > 0:
                    deficient_set.add(v)
                    changed = True
    deficient = [
        {
            "venture_id": grid.venture_ids[v],
            "eligible_judges": int(grid.eligible[:, v].sum()),
        }
        for v in sorted(deficient_set)
    ]
    raise InfeasibleAssignmentError(
        f"assignment infeasible: flow {result.flow_value} < required {needed}",
        certificate={"deficient_ventures": deficient, "flow": int(result.flow_value), "required": needed},
    )


def _scaled_scores(grid: SimilarityGrid) -> np.ndarray:
    return np.round(grid.similarities / SIMILARITY_RESOLUTION).astype(np.int64)


def assign_maxmin(grid: SimilarityGrid, constraints: ConstraintSet) -> Assignment:
    """Assignment maximizing the minimum per-venture quality sum, then total similarity.

    Three deterministic exact phases on 1e-6-discretized scores:
      1. maximize the minimum per-venture sum of assigned similarities,
      2. among those, maximize total similarity,
      3. among those, prefer lexicographically earlier (judge_id, venture_id) edges.
    """
    if not grid.venture_ids:
        return Assignment(pairs=frozenset(), venture_quality={})
    check_flow_feasibility(grid, constraints)
    n_j = len(grid.judge_ids)
    n_v = len(grid.venture_ids)
    scores = _scaled_scores(grid)
    edges = [
        (j, v)
        for j in range(n_j)
        for v in range(n_v)
        if grid.eligible[j, v]
    ]
    edges.sort(key=lambda e: (grid.judge_ids[e[0]], grid.venture_ids[e[1]]))
    m = len(edges)
    panel = constraints.venture_panel_size
    load = constraints.judge_load_max

    rows_panel = np.zeros((n_v, m))
    rows_load = np.zeros((n_j, m))
    rows_quality = np.zeros((n_v, m))
    for e, (j, v) in enumerate(edges):
        rows_panel[v, e] = 1.0
        rows_load[j, e] = 1.0
        rows_quality[v, e] = float(scores[j, v])

    base_constraints = [
        LinearConstraint(rows_panel, np.full(n_v, panel), np.full(n_v, panel)),
        LinearConstraint(rows_load, np.zeros(n_j), np.full(n_j, load)),
    ]

    # phase 1: max t with per-venture quality >= t
    t_max = float(panel * scores.max()) if m else 0.0
    quality_with_t = np.hstack([rows_quality, -np.ones((n_v, 1))])
    phase1 = [
        LinearConstraint(np.hstack([rows_panel, np.zeros((n_v, 1))]), np.full(n_v, panel), np.full(n_v, panel)),
        LinearConstraint(np.hstack([rows_load, np.zeros((n_j, 1))]), np.zeros(n_j), np.full(n_j, load)),
        LinearConstraint(quality_with_t, np.zeros(n_v), np.full(n_v, np.inf)),
    ]
    objective = np.zeros(m + 1)
    objective[-1] = -1.0
    bounds = Bounds(np.zeros(m + 1), np.concatenate([np.ones(m), [max(t_max, 0.0)]]))
    res = milp(objective, constraints=phase1, integrality=np.ones(m + 1), bounds=bounds)
    if res.status != 0:
        raise InfeasibleAssignmentError(
            f"max-min optimization failed with solver status {res.status}", certificate={}
        )
    t_star = int(round(res.x[-1]))

    # phase 2: fix min quality, maximize total similarity
    quality_floor = LinearConstraint(rows_quality, np.full(n_v, float(t_star)), np.full(n_v, np.inf))
    edge_scores = np.array([float(scores[j, v]) for j, v in edges])
    res2 = milp(
        -edge_scores,
        constraints=base_constraints + [quality_floor],
        integrality=np.ones(m),
        bounds=Bounds(np.zeros(m), np.ones(m)),
    )
    if res2.status != 0:
        raise InfeasibleAssignmentError(
            f"total-similarity optimization failed with solver status {res2.status}", certificate={}
        )
    total_star = int(round(float(edge_scores @ np.round(res2.x))))

    # phase 3: fix both objectives, prefer lexicographically earlier edges
    total_eq = LinearConstraint(edge_scores[np.newaxis, :], [float(total_star)], [float(total_star)])
    priorities = np.arange(m, 0, -1, dtype=np.float64)
    res3 = milp(
        -priorities,
        constraints=base_constraints + [quality_floor, total_eq],
        integrality=np.ones(m),
        bounds=Bounds(np.zeros(m), np.ones(m)),
    )
    solution = res3.x if res3.status == 0 else res2.x
    chosen = np.flatnonzero(np.round(solution) > 0.5)
    pairs = frozenset((grid.judge_ids[edges[e][0]], grid.venture_ids[edges[e][1]]) for e in chosen)
    quality = {v: 0.0 for v in grid.venture_ids}
    for judge_id, venture_id in pairs:
        quality[venture_id] += grid.similarity(judge_id, venture_id)
    return Assignment(pairs=pairs, venture_quality=quality)


def validate(assignment: Assignment, grid: SimilarityGrid, constraints: ConstraintSet) -> list[Violation]:
    """Check panel sizes, judge loads, and eligibility; empty list means valid."""
    violations = []
    for venture_id in grid.venture_ids:
        count = len(assignment.judges_of(venture_id))
        if count != constraints.venture_panel_size:
            violations.append(
                Violation("panel_size", None, venture_id, count, constraints.venture_panel_size)
            )
    known_judges = set(grid.judge_ids)
    known_ventures = set(grid.venture_ids)
    for judge_id in sorted(known_judges | {j for j, _ in assignment.pairs}):
        count = len(assignment.ventures_of(judge_id))
        if count > constraints.judge_load_max:
            violations.append(Violation("load_max", judge_id, None, count, constraints.judge_load_max))
    for judge_id, venture_id in sorted(assignment.pairs):
        known = judge_id in known_judges and venture_id in known_ventures
        if not known or not grid.is_eligible(judge_id, venture_id):
            violations.append(Violation("ineligible_pair", judge_id, venture_id, 1, 0))
    return violations


def suggest_replacements(
    assignment: Assignment,
    venture_id: str,
    removed_judge_id: str,
    k: int,
    grid: SimilarityGrid,
    constraints: ConstraintSet,
) -> list[tuple[str, float]]:
    """Ranked eligible stand-ins for a removed judge: under load cap, not already on the panel."""
    if (removed_judge_id, venture_id) not in assignment.pairs:
        raise ValueError(f"judge {removed_judge_id!r} is not assigned to venture {venture_id!r}")
    panel = set(assignment.judges_of(venture_id)) - {removed_judge_id}
    candidates = []
    for judge_id in grid.judge_ids:
        if judge_id == removed_judge_id or judge_id in panel:
            continue
        if not grid.is_eligible(judge_id, venture_id):
            continue
        if len(assignment.ventures_of(judge_id)) >= constraints.judge_load_max:
            continue
        candidates.append((judge_id, grid.similarity(judge_id, venture_id)))
    candidates.sort(key=lambda c: (-c[1], c[0]))
    return candidates[:k]


def apply_swap(
    assignment: Assignment,
    grid: SimilarityGrid,
    venture_id: str,
    remove_judge_id: str,
    add_judge_id: str,
) -> Assignment:
    """New assignment with one panel seat exchanged; caller revalidates before committing."""
    if (remove_judge_id, venture_id) not in assignment.pairs:
        raise ValueError(f"judge {remove_judge_id!r} is not assigned to venture {venture_id!r}")
    if (add_judge_id, venture_id) in assignment.pairs:
        raise ValueError(f"judge {add_judge_id!r} is already assigned to venture {venture_id!r}")
    pairs = set(assignment.pairs)
    pairs.remove((remove_judge_id, venture_id))
    pairs.add((add_judge_id, venture_id))
    quality = dict(assignment.venture_quality)
    quality[venture_id] += grid.similarity(add_judge_id, venture_id) - grid.similarity(
        remove_judge_id, venture_id
    )
    return Assignment(pairs=frozenset(pairs), venture_quality=quality)


def assignment_report(assignment: Assignment, grid: SimilarityGrid, constraints: ConstraintSet) -> dict:
    qualities = [assignment.venture_quality[v] for v in grid.venture_ids]
    return {
        "ventures": [
            {
                "venture_id": v,
                "quality": round(assignment.venture_quality[v], 6),
                "judges": assignment.judges_of(v),
            }
            for v in grid.venture_ids
        ],
        "min_quality": round(min(qualities), 6) if qualities else 0.0,
        "mean_quality": round(float(np.mean(qualities)), 6) if qualities else 0.0,
        "max_quality": round(max(qualities), 6) if qualities else 0.0,
        "violations": [v.to_dict() for v in validate(assignment, grid, constraints)],
    }


def export_assignment_csv(assignment: Assignment, grid: SimilarityGrid, tracks: dict[str, str]) -> str:
    lines = ["judge_id,venture_id,similarity,track"]
    for judge_id, venture_id in sorted(assignment.pairs):
        sim = grid.similarity(judge_id, venture_id)
        lines.append(f"{judge_id},{venture_id},{sim:.6f},{tracks.get(venture_id, '')}")
    return "\n".join(lines) + "\n"
