"""
Plackett-Luce objective - permutation probabilities, ListMLE and the hybrid loss

Every tail normaliser log(sum_{j>=i} exp(l_j)) is a reverse cumulative
``logaddexp``, so logits spanning a wide range never overflow. All
accumulation happens in float64. A sub-list target renormalises its
tails over the selected classes only.
"""
import math
from typing import List, Tuple

import numpy as np
from scipy.special import log_softmax, softmax

from pipeline.core.errors import ConsistencyError, InputValidationError
from pipeline.models.objective_models import LossValue, RankTarget, SubsetMode
from pipeline.models.rank_models import CanonicalRanking, CanonicalTable


def _as_vector(values, name: str = "logits") -> np.ndarray:
    vec = np.asarray(values, dtype=np.float64)
    if vec.ndim != 1:
        raise InputValidationError(f"{name} must be a vector, got shape {vec.shape}")
    if vec.size == 0:
        raise InputValidationError(f"{name} must not be empty")
    if not np.all(np.isfinite(vec)):
        raise InputValidationError(f"{name} contain non-finite values")
    return vec


def _tails(ordered: np.ndarray) -> np.ndarray:
    """log sum_{j >= i} exp(x_j) for every i, along the last axis."""
    return np.flip(np.logaddexp.accumulate(np.flip(ordered, -1), axis=-1), -1)


def pl_permutation_prob(logits_in_rank_order, log_space: bool = False) -> float:
    """
    Plackett-Luce probability of the order in which the logits are given.

    Args:
        logits_in_rank_order: Logits of the ranked items, best first
        log_space: Return the log-probability instead

    Returns:
        Probability in (0, 1], or its logarithm
    """
    ordered = _as_vector(logits_in_rank_order)
    log_prob = min(0.0, math.fsum(ordered - _tails(ordered)))
    return log_prob if log_space else math.exp(log_prob)


def _target_logits(logits, target: RankTarget) -> Tuple[np.ndarray, np.ndarray]:
    vec = _as_vector(logits)
    classes = np.asarray(target.classes, dtype=np.int64)
    if classes.max() >= vec.size:
        raise InputValidationError(
            f"target class {int(classes.max())} is outside [0, {vec.size})"
        )
    return vec, classes


def listmle_loss(logits, target: RankTarget) -> float:
    """ListMLE loss of the target sub-list, -log of its Plackett-Luce probability."""
    vec, classes = _target_logits(logits, target)
    return -pl_permutation_prob(vec[classes], log_space=True)


def listmle_grad(logits, target: RankTarget) -> np.ndarray:
    """Gradient of ``listmle_loss`` with respect to every logit."""
    vec, classes = _target_logits(logits, target)
    grad = np.zeros_like(vec)
    grad[classes] = _listmle_grad_ordered(vec[classes])
    return grad


def _listmle_grad_ordered(ordered: np.ndarray) -> np.ndarray:
    # d/dx_k = -1 + sum_{t <= k} exp(x_k - tail_t)
    tails = _tails(ordered)
    return np.expm1(ordered + np.logaddexp.accumulate(-tails, axis=-1))


def _labelled_vector(logits, label: int) -> np.ndarray:
    vec = _as_vector(logits)
    if not 0 <= int(label) < vec.size:
        raise InputValidationError(f"label {label} is outside [0, {vec.size})")
    return vec


def cross_entropy(logits, label: int) -> float:
    vec = _labelled_vector(logits, label)
    return float(-log_softmax(vec)[label])


def cross_entropy_grad(logits, label: int) -> np.ndarray:
    vec = _labelled_vector(logits, label)
    grad = softmax(vec)
    grad[label] -= 1.0
    return grad


def _check_label(label: int, target: RankTarget) -> None:
    if int(label) != target.true_class:
        raise ConsistencyError(
            f"label {label} differs from target class {target.true_class} at rank 0"
        )


def hybrid_loss(logits, label: int, target: RankTarget, alpha: float) -> LossValue:
    """Cross-entropy plus ``alpha`` times ListMLE."""
    _check_label(label, target)
    if alpha < 0:
        raise InputValidationError(f"alpha must be >= 0, got {alpha}")
    ce = cross_entropy(logits, label)
    lm = listmle_loss(logits, target)
    return LossValue(total=ce + alpha * lm, ce_part=ce, listmle_part=lm, alpha=alpha)


def hybrid_grad(logits, label: int, target: RankTarget, alpha: float) -> np.ndarray:
    """Gradient of ``hybrid_loss``: CE gradient plus ``alpha`` times ListMLE gradient."""
    _check_label(label, target)
    return cross_entropy_grad(logits, label) + alpha * listmle_grad(logits, target)


# ---------------------------------------------------------------------------
# Batched forms used by the trainer
# ---------------------------------------------------------------------------

def cross_entropy_batch(logits: np.ndarray, labels: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per-sample CE losses (B,) and logit gradients (B, C)."""
    rows = np.arange(logits.shape[0])
    log_probs = log_softmax(logits, axis=1)
    grad = np.exp(log_probs)
    grad[rows, labels] -= 1.0
    return -log_probs[rows, labels], grad


def listmle_loss_batch(logits: np.ndarray, target_classes: np.ndarray) -> np.ndarray:
    """Per-sample ListMLE losses for a (B, m) matrix of target classes."""
    ordered = np.take_along_axis(logits, target_classes, axis=1)
    return np.maximum(0.0, -(ordered - _tails(ordered)).sum(axis=1))


def listmle_grad_batch(logits: np.ndarray, target_classes: np.ndarray) -> np.ndarray:
    ordered = np.take_along_axis(logits, target_classes, axis=1)
    grad = np.zeros_like(logits)
    np.put_along_axis(grad, target_classes, _listmle_grad_ordered(ordered), axis=1)
    return grad


def hybrid_loss_batch(
    logits: np.ndarray,
    labels: np.ndarray,
    target_classes: np.ndarray,
    alpha: float,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Hybrid loss over a minibatch.

    Returns:
        (ce losses (B,), listmle losses (B,), per-sample logit gradients (B, C))
    """
    if np.any(target_classes[:, 0] != labels):
        row = int(np.flatnonzero(target_classes[:, 0] != labels)[0])
        raise ConsistencyError(
            f"row {row}: label {int(labels[row])} differs from target class "
            f"{int(target_classes[row, 0])} at rank 0"
        )
    ce, grad = cross_entropy_batch(logits, labels)
    lm = listmle_loss_batch(logits, target_classes)
    grad = grad + alpha * listmle_grad_batch(logits, target_classes)
    return ce, lm, grad


# ---------------------------------------------------------------------------
# Rank subsets
# ---------------------------------------------------------------------------

def subset_positions(K: int, mode: SubsetMode, count: int) -> List[int]:
    """
    Rank positions kept by a subset mode over positions 0..K.

    top keeps 0..N-1; bottom keeps 0 and the lowest N-1 positions;
    top_bottom keeps ceil(N/2) top positions (rank 0 included) and the
    floor(N/2) lowest ones; full keeps everything.
    """
    mode = SubsetMode(mode)
    total = K + 1
    if mode == SubsetMode.FULL:
        return list(range(total))
    if not 1 <= count <= total:
        raise InputValidationError(
            f"subset size N={count} must lie in [1, {total}] for K={K}"
        )
    if mode == SubsetMode.TOP:
        return list(range(count))
    if mode == SubsetMode.BOTTOM:
        return [0] + list(range(K - count + 2, total))
    n_top = (count + 1) // 2
    n_bottom = count // 2
    return list(range(n_top)) + list(range(total - n_bottom, total))


def select_rank_subset(canonical: CanonicalRanking, mode: SubsetMode, N: int) -> RankTarget:
    """Sub-list of a canonical ranking used as a ListMLE target."""
    positions = subset_positions(canonical.K, mode, N)
    return RankTarget(
        positions=positions,
        classes=[canonical.permutation[p] for p in positions],
        subset_mode=SubsetMode(mode),
        count=len(positions),
    )


def target_matrix(table: CanonicalTable, labels: np.ndarray, positions: List[int]) -> np.ndarray:
    """(N, m) target classes: the selected canonical positions of each sample's label."""
    return table.permutation_matrix()[:, positions][np.asarray(labels, dtype=np.int64)]
