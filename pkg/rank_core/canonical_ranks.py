"""
Canonical ranks - one fixed class ranking per predicted class

Picking one candidate class per rank position so that the summed rank
probabilities are maximal is a rectangular assignment problem; it is
solved exactly with scipy's ``linear_sum_assignment``. Among equally
optimal assignments the lexicographically smallest permutation wins.
"""
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from config import config
from pipeline.core.errors import (
    BruteForceGuardError,
    EmptySupportError,
    FormatError,
    InfeasibleAssignmentError,
    PipelineError,
)
from pipeline.core.logging import ArtifactLogger, ComputeLogger
from pipeline.models.rank_models import CanonicalRanking, CanonicalTable, RankProbabilityMatrix

compute_logger = ComputeLogger("rank_core.canonical_ranks")
artifact_logger = ArtifactLogger()

BRUTE_FORCE_MAX_CANDIDATES = 8


def _objective(probs: np.ndarray, assignment: List[int]) -> float:
    """Sum of the selected probabilities, accumulated in rank order."""
    return math.fsum(probs[cand, rank] for rank, cand in enumerate(assignment))


def _tolerance(value: float) -> float:
    return 1e-12 * max(1.0, abs(value))


def _check_feasible(rpm: RankProbabilityMatrix) -> None:
    if rpm.K > len(rpm.candidate_classes):
        raise InfeasibleAssignmentError(
            f"class {rpm.predicted_class}: {rpm.K} ranks but only "
            f"{len(rpm.candidate_classes)} candidate classes"
        )


def _solve_fixed(probs: np.ndarray, fixed: Dict[int, int]) -> List[int]:
    """Optimal assignment (candidate row per rank) with some ranks pinned."""
    n_cand, K = probs.shape
    assignment = [-1] * K
    for rank, cand in fixed.items():
        assignment[rank] = cand
    free_ranks = [j for j in range(K) if j not in fixed]
    if free_ranks:
        used = set(fixed.values())
        free_cands = [i for i in range(n_cand) if i not in used]
        block = probs[np.ix_(free_cands, free_ranks)].T
        rows, cols = linear_sum_assignment(block, maximize=True)
        for r, c in zip(rows, cols):
            assignment[free_ranks[r]] = free_cands[c]
    return assignment


def _upper_bound(probs: np.ndarray, fixed: Dict[int, int], rank: int, cand: int) -> float:
    """Cheap bound on the objective once ``rank`` is pinned to ``cand``."""
    used = set(fixed.values()) | {cand}
    free = [i for i in range(probs.shape[0]) if i not in used]
    bound = math.fsum(probs[c, r] for r, c in fixed.items()) + probs[cand, rank]
    for j in range(probs.shape[1]):
        if j in fixed or j == rank:
            continue
        bound += probs[free, j].max() if free else 0.0
    return bound


def _lexicographic_optimum(probs: np.ndarray) -> List[int]:
    assignment = _solve_fixed(probs, {})
    best = _objective(probs, assignment)
    tol = _tolerance(best)

    fixed: Dict[int, int] = {}
    for rank in range(probs.shape[1]):
        used = set(fixed.values())
        for cand in range(assignment[rank]):
            if cand in used:
                continue
            if _upper_bound(probs, fixed, rank, cand) < best - tol:
                continue
            trial = _solve_fixed(probs, {**fixed, rank: cand})
            if _objective(probs, trial) >= best - tol:
                assignment = trial
                break
        fixed[rank] = assignment[rank]
    return assignment


def _to_ranking(rpm: RankProbabilityMatrix, assignment: List[int]) -> CanonicalRanking:
    permutation = [rpm.predicted_class] + [rpm.candidate_classes[a] for a in assignment]
    return CanonicalRanking(
        predicted_class=rpm.predicted_class,
        permutation=permutation,
        objective_value=_objective(rpm.probs, assignment),
        support_count=rpm.support_count,
    )


def solve_assignment(rpm: RankProbabilityMatrix) -> CanonicalRanking:
    """
    Canonical ranking maximising the summed rank probabilities.

    Raises:
        EmptySupportError: the RPM has no supporting samples
        InfeasibleAssignmentError: more ranks than candidate classes
    """
    if rpm.is_empty:
        raise EmptySupportError(
            f"class {rpm.predicted_class} has no correctly classified sample"
        )
    _check_feasible(rpm)
    ranking = _to_ranking(rpm, _lexicographic_optimum(rpm.probs))
    compute_logger.log_debug(
        "canonical_ranks", "solve_assignment",
        predicted_class=rpm.predicted_class, objective=ranking.objective_value,
    )
    return ranking


def solve_assignment_bruteforce(rpm: RankProbabilityMatrix) -> CanonicalRanking:
    """Exhaustive reference solve over every injective rank -> class map."""
    n_cand = len(rpm.candidate_classes)
    if n_cand > BRUTE_FORCE_MAX_CANDIDATES:
        raise BruteForceGuardError(
            f"brute force refuses {n_cand} candidates (limit {BRUTE_FORCE_MAX_CANDIDATES})"
        )
    _check_feasible(rpm)

    best_assignment: Optional[List[int]] = None
    best = -math.inf
    # permutations() yields in lexicographic order, so the first optimum is the smallest
    for candidate in itertools.permutations(range(n_cand), rpm.K):
        value = _objective(rpm.probs, list(candidate))
        if best_assignment is None or value > best + _tolerance(best):
            best, best_assignment = value, list(candidate)
    return _to_ranking(rpm, best_assignment)


def solve_table(
    rpm_table: Dict[int, RankProbabilityMatrix],
    max_workers: Optional[int] = None,
) -> CanonicalTable:
    """
    Canonical rankings for every class of an RPM table.

    Raises:
        PipelineError: listing every class whose RPM has empty support
    """
    empty = [c for c, rpm in rpm_table.items() if rpm.is_empty]
    if empty:
        compute_logger.log_error("canonical_ranks", "solve_table", "empty support", classes=sorted(empty))
        raise PipelineError(empty)

    classes = sorted(rpm_table)
    with ThreadPoolExecutor(max_workers=max_workers or config.num_workers) as pool:
        rankings = list(pool.map(lambda c: solve_assignment(rpm_table[c]), classes))

    K = rankings[0].K
    n_classes = len(rpm_table[classes[0]].candidate_classes) + 1
    table = CanonicalTable(n_classes=n_classes, K=K, rankings=dict(zip(classes, rankings)))
    compute_logger.log_operation(
        "canonical_ranks", "solve_table",
        n_classes=n_classes, K=K,
        objective={c: r.objective_value for c, r in table.rankings.items()},
    )
    return table


def write_canonical_table(table: CanonicalTable, path: Union[str, Path]) -> None:
    """Persist a canonical table as JSON (class -> permutation, objective, support)."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    try:
        target.write_text(table.model_dump_json(indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        artifact_logger.log_error("write", str(target), str(e))
        raise
    artifact_logger.log_operation("write", str(target), format="canonical_json", classes=len(table.rankings))


def read_canonical_table(path: Union[str, Path]) -> CanonicalTable:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: canonical table is not valid JSON: {e}")
    table = CanonicalTable.model_validate(payload)
    artifact_logger.log_operation("read", str(path), format="canonical_json", classes=len(table.rankings))
    return table
