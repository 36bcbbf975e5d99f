"""
Rank statistics - per-class Rank Probability Matrices (RPMs)

For a class c, the RPM counts which class sits at each rank position
1..K among the samples that are labelled c and predicted as c. Rank 0 is
the predicted class itself and is not stored.
"""
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
import pandas as pd

from config import config
from pipeline.core.errors import FormatError, InputValidationError
from pipeline.core.logging import ArtifactLogger, ComputeLogger
from pipeline.models.logit_models import LogitMatrix
from pipeline.models.rank_models import RankProbabilityMatrix
from utilities.tensor_io import CSV_FLOAT_FORMAT

compute_logger = ComputeLogger("rank_core.rank_stats")
artifact_logger = ArtifactLogger()

RPMTable = Dict[int, RankProbabilityMatrix]


def rank_order(logits: np.ndarray) -> np.ndarray:
    """
    Class indices of every row sorted by descending logit.

    Ties go to the lowest class index (stable sort of the negated row).
    Column 0 is the argmax prediction.
    """
    values = np.asarray(logits)
    if values.ndim != 2:
        raise InputValidationError(f"expected an N x C matrix, got shape {values.shape}")
    return np.argsort(-values, axis=1, kind="stable")


def _resolve_k(n_classes: int, K: Optional[int]) -> int:
    k = n_classes - 1 if K is None else int(K)
    if not 1 <= k <= n_classes - 1:
        raise InputValidationError(f"K must lie in [1, {n_classes - 1}], got {k}")
    return k


def _tally(order: np.ndarray, labels: np.ndarray, target_class: int, K: int) -> RankProbabilityMatrix:
    n_classes = order.shape[1]
    candidates = [i for i in range(n_classes) if i != target_class]
    row_of = np.full(n_classes, -1, dtype=np.int64)
    row_of[candidates] = np.arange(len(candidates))

    mask = (order[:, 0] == labels) & (labels == target_class)
    support = int(mask.sum())
    ranked = order[mask, 1:K + 1]

    counts = np.zeros((len(candidates), K), dtype=np.int64)
    for j in range(K):
        counts[:, j] = np.bincount(row_of[ranked[:, j]], minlength=len(candidates))

    if support == 0:
        compute_logger.log_warning(
            "rank_stats", "compute_rpm", "no correctly classified sample",
            predicted_class=target_class,
        )
        probs = np.zeros_like(counts, dtype=np.float64)
    else:
        probs = counts / float(support)

    return RankProbabilityMatrix(
        predicted_class=target_class,
        candidate_classes=candidates,
        counts=counts,
        probs=probs,
        support_count=support,
    )


def compute_rpm(logits: LogitMatrix, target_class: int, K: Optional[int] = None) -> RankProbabilityMatrix:
    """
    Rank Probability Matrix of one class.

    Args:
        logits: Labelled logit matrix
        target_class: Class c to condition on
        K: Rank positions below rank 0 (default C - 1)

    Returns:
        RPM with ``support_count == 0`` and all-zero probabilities when no
        sample of ``target_class`` is classified correctly
    """
    labels = logits.require_labels()
    if not 0 <= target_class < logits.n_classes:
        raise InputValidationError(
            f"target class {target_class} is outside [0, {logits.n_classes})"
        )
    k = _resolve_k(logits.n_classes, K)
    rpm = _tally(rank_order(logits.data), labels, int(target_class), k)
    compute_logger.log_debug(
        "rank_stats", "compute_rpm", predicted_class=target_class, K=k, support=rpm.support_count
    )
    return rpm


def compute_rpm_table(
    logits: LogitMatrix,
    K: Optional[int] = None,
    max_workers: Optional[int] = None,
) -> RPMTable:
    """RPMs of every class, computed per class on a thread pool."""
    labels = logits.require_labels()
    k = _resolve_k(logits.n_classes, K)
    order = rank_order(logits.data)
    workers = max_workers or config.num_workers

    classes = list(range(logits.n_classes))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rpms = list(pool.map(lambda c: _tally(order, labels, c, k), classes))

    table = dict(zip(classes, rpms))
    compute_logger.log_operation(
        "rank_stats", "compute_rpm_table",
        n_classes=logits.n_classes, K=k,
        support={c: r.support_count for c, r in table.items()},
    )
    return table


def _rank_columns(K: int):
    return [f"rank_{j}" for j in range(1, K + 1)]


def rpm_table_frame(table: RPMTable) -> pd.DataFrame:
    """Long table: one row per (predicted class, candidate class)."""
    rows = []
    for cls in sorted(table):
        rpm = table[cls]
        for r, candidate in enumerate(rpm.candidate_classes):
            row = {
                "predicted_class": cls,
                "support_count": rpm.support_count,
                "class": candidate,
            }
            row.update(zip(_rank_columns(rpm.K), rpm.probs[r].tolist()))
            rows.append(row)
    return pd.DataFrame(rows)


def write_rpm_table(table: RPMTable, path: Union[str, Path]) -> None:
    """Persist an RPM table as CSV."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    frame = rpm_table_frame(table)
    try:
        frame.to_csv(target, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        artifact_logger.log_error("write", str(target), str(e))
        raise
    artifact_logger.log_operation("write", str(target), format="rpm_csv", rows=len(frame))


def read_rpm_table(path: Union[str, Path]) -> RPMTable:
    """Read an RPM CSV written by ``write_rpm_table``."""
    frame = pd.read_csv(path, float_precision="round_trip")
    fixed = ["predicted_class", "support_count", "class"]
    if list(frame.columns[:3]) != fixed:
        raise FormatError(f"{path}: RPM CSV must start with columns {fixed}")
    rank_cols = list(frame.columns[3:])
    if not rank_cols or rank_cols != _rank_columns(len(rank_cols)):
        raise FormatError(f"{path}: RPM CSV rank columns must be rank_1..rank_K")

    table: RPMTable = {}
    for cls, group in frame.groupby("predicted_class", sort=True):
        support = int(group["support_count"].iloc[0])
        probs = group[rank_cols].to_numpy(dtype=np.float64)
        counts = np.rint(probs * support).astype(np.int64)
        table[int(cls)] = RankProbabilityMatrix(
            predicted_class=int(cls),
            candidate_classes=[int(x) for x in group["class"]],
            counts=counts,
            probs=probs,
            support_count=support,
        )
    artifact_logger.log_operation("read", str(path), format="rpm_csv", classes=len(table))
    return table
