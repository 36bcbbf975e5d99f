"""
OOD detection metrics (AUROC, FPR at a target TPR) and rank diagnostics

Scores follow the higher = more ID convention throughout.
"""
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import roc_auc_score

from pipeline.core.errors import InputValidationError
from pipeline.core.logging import ComputeLogger
from pipeline.models.logit_models import LogitMatrix
from pipeline.models.rank_models import CanonicalTable
from pipeline.models.report_models import CPMatrix, RankLogitSummary
from rank_core.rank_stats import rank_order

compute_logger = ComputeLogger("ood_metrics.metrics_eval")


def _scores(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise InputValidationError(f"{name} scores must not be empty")
    if not np.all(np.isfinite(arr)):
        raise InputValidationError(f"{name} scores contain non-finite values")
    return arr


def auroc(id_scores, ood_scores) -> float:
    """
    Area under the ROC curve with ID as the positive class.

    Equals P(id > ood) + 0.5 * P(id == ood).
    """
    id_arr = _scores(id_scores, "ID")
    ood_arr = _scores(ood_scores, "OOD")
    y_true = np.concatenate([np.ones(id_arr.size), np.zeros(ood_arr.size)])
    return float(roc_auc_score(y_true, np.concatenate([id_arr, ood_arr])))


def fpr_at_tpr(id_scores, ood_scores, tpr: float = 0.95) -> Tuple[float, float]:
    """
    OOD false-positive rate at the threshold that keeps ``tpr`` of the ID scores.

    The threshold is the ceil(tpr * n)-th largest ID score; both rates
    count scores >= threshold.

    Returns:
        (fpr, threshold)
    """
    if not 0.0 < tpr <= 1.0:
        raise InputValidationError(f"tpr must lie in (0, 1], got {tpr}")
    id_arr = _scores(id_scores, "ID")
    ood_arr = _scores(ood_scores, "OOD")
    k = max(1, math.ceil(round(tpr * id_arr.size, 9)))
    threshold = float(np.sort(id_arr)[::-1][k - 1])
    return float(np.mean(ood_arr >= threshold)), threshold


def id_accuracy(logits: LogitMatrix) -> float:
    """Fraction of rows whose argmax equals the label."""
    labels = logits.require_labels()
    return float(np.mean(rank_order(logits.data)[:, 0] == labels))


def cp_matrix(logits: LogitMatrix, canon: CanonicalTable) -> CPMatrix:
    """
    Conditional probability that rank i is canonical given ranks 1..i-1 are.

    Rows are grouped by predicted class. Entries whose conditioning set is
    empty are None.
    """
    K = canon.K
    order = rank_order(logits.data)[:, :K + 1]
    predicted = order[:, 0]
    missing = sorted({int(c) for c in np.unique(predicted)} - set(canon.rankings))
    if missing:
        raise InputValidationError(f"canonical table misses predicted classes {missing}")

    per_class: Dict[int, List[Optional[float]]] = {}
    numerators: Dict[int, List[int]] = {}
    denominators: Dict[int, List[int]] = {}
    for c in sorted(canon.rankings):
        rows = order[predicted == c]
        perm = np.asarray(canon.permutation_for(c))
        prefix = np.logical_and.accumulate(rows[:, 1:] == perm[1:], axis=1)
        num = prefix.sum(axis=0).astype(int).tolist()
        den = [int(rows.shape[0])] + num[:-1]
        numerators[c] = num
        denominators[c] = den
        per_class[c] = [n / d if d > 0 else None for n, d in zip(num, den)]

    return CPMatrix(per_class=per_class, numerators=numerators, denominators=denominators)


def cp_mean(cp: CPMatrix) -> float:
    """Mean of the defined CP entries (NaN when none is defined)."""
    entries = cp.defined_entries()
    return float(np.mean(entries)) if entries else float("nan")


def rank_logit_summary(
    logits: LogitMatrix,
    canon: CanonicalTable,
    positions: Sequence[int],
    bins: int = 20,
) -> List[RankLogitSummary]:
    """Mean, population std and histogram of the rank-i logit for each position."""
    bad = [p for p in positions if not 0 <= p <= canon.K]
    if bad:
        raise InputValidationError(f"positions {bad} are outside [0, {canon.K}]")
    values = logits.as_float64()
    ranked = np.take_along_axis(values, rank_order(values), axis=1)[:, list(positions)]
    edges = np.histogram_bin_edges(ranked, bins=bins)

    summaries = []
    for j, position in enumerate(positions):
        column = ranked[:, j]
        hist, _ = np.histogram(column, bins=edges)
        summaries.append(RankLogitSummary(
            position=int(position),
            mean=float(column.mean()),
            std=float(column.std()),
            histogram=hist.astype(int).tolist(),
            bin_edges=edges.tolist(),
        ))
    compute_logger.log_debug("metrics_eval", "rank_logit_summary", positions=list(positions))
    return summaries


def default_summary_positions(K: int) -> List[int]:
    """First, middle and last rank positions."""
    return sorted({0, K // 2, K})
