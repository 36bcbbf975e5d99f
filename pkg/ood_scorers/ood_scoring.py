"""
OOD scoring - threshold profiles, cumulative margin penalty and the RankOOD score

For a sample with predicted class c and sorted logits x_0 >= ... >= x_K:

    r_i   = #{j in [i, K] : rank-j class != canonical rank-j class of c}
    d_i   = gamma ** r_i
    u_i   = x_i / d_i - Ref^c_i
    score = sum_i w_i * log_softmax(u)_i

Higher scores mean more in-distribution.
"""
import json
import math
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from scipy.special import log_softmax, softmax
from sklearn.linear_model import LinearRegression, Ridge

from pipeline.core.errors import (
    FormatError,
    InputValidationError,
    ProfileError,
    ScoringError,
    WeightFitError,
)
from pipeline.core.logging import ArtifactLogger, ComputeLogger
from pipeline.models.logit_models import LogitMatrix
from pipeline.models.rank_models import CanonicalRanking, CanonicalTable
from pipeline.models.scoring_models import FitReport, PenaltyConfig, RankWeights, ThresholdProfile
from rank_core.rank_stats import rank_order

compute_logger = ComputeLogger("ood_scorers.ood_scoring")
artifact_logger = ArtifactLogger()

DEFAULT_RIDGE_LAMBDA = 1e-6

LogitsLike = Union[LogitMatrix, np.ndarray]


def _logit_values(logits: LogitsLike) -> np.ndarray:
    if isinstance(logits, LogitMatrix):
        return logits.as_float64()
    values = np.asarray(logits, dtype=np.float64)
    if values.ndim == 1:
        values = values[None, :]
    if values.ndim != 2 or not np.all(np.isfinite(values)):
        raise InputValidationError("logits must be a finite vector or N x C matrix")
    return values


def _sorted_ranks(values: np.ndarray, K: int) -> Tuple[np.ndarray, np.ndarray]:
    """Class at ranks 0..K and the matching logits, per row."""
    if K + 1 > values.shape[1]:
        raise InputValidationError(f"K={K} needs at least {K + 1} classes, got {values.shape[1]}")
    order = rank_order(values)[:, :K + 1]
    return order, np.take_along_axis(values, order, axis=1)


def nearest_rank_percentile(values: np.ndarray, percentile: float) -> float:
    """Nearest-rank order statistic: the ceil(p * n)-th smallest value."""
    ordered = np.sort(np.asarray(values, dtype=np.float64))
    if ordered.size == 0:
        raise InputValidationError("percentile of an empty sample")
    k = max(1, math.ceil(round(percentile * ordered.size, 9)))
    return float(ordered[k - 1])


def build_profile(logits: LogitMatrix, canon: CanonicalTable, percentile: float = 0.95) -> ThresholdProfile:
    """
    Per-class, per-rank reference logits from correctly classified samples.

    A sample qualifies when it is classified correctly and agrees with its
    class's canonical ranking at >= N of the positions 0..K, with N the
    largest value that leaves every class at least one sample.

    Raises:
        ProfileError: listing classes without a correctly classified sample
    """
    if not 0.0 < percentile < 1.0:
        raise InputValidationError(f"percentile must lie in (0, 1), got {percentile}")
    labels = logits.require_labels()
    values = logits.as_float64()
    order, ranked = _sorted_ranks(values, canon.K)
    correct = order[:, 0] == labels

    classes = sorted(int(c) for c in np.unique(labels))
    uncovered = [c for c in classes if c not in canon.rankings]
    if uncovered:
        raise InputValidationError(f"canonical table misses classes {uncovered}")
    empty = [c for c in classes if not np.any(correct & (labels == c))]
    if empty:
        compute_logger.log_error("ood_scoring", "build_profile", "no correct samples", classes=empty)
        raise ProfileError(empty)

    matches = {}
    for c in classes:
        rows = np.flatnonzero(correct & (labels == c))
        perm = np.asarray(canon.permutation_for(c))
        matches[c] = (rows, (order[rows] == perm).sum(axis=1))
    n_min = int(min(m.max() for _, m in matches.values()))

    per_class, support = {}, {}
    for c in classes:
        rows, m = matches[c]
        kept = ranked[rows[m >= n_min]]
        per_class[c] = [nearest_rank_percentile(kept[:, i], percentile) for i in range(canon.K + 1)]
        support[c] = int(kept.shape[0])

    compute_logger.log_operation(
        "ood_scoring", "build_profile", classes=len(classes), n_min_correct=n_min, support=support
    )
    return ThresholdProfile(per_class=per_class, percentile=percentile, n_min_correct=n_min, support=support)


def penalty_vector(predicted_ranking, canonical: Union[CanonicalRanking, np.ndarray], gamma: float) -> np.ndarray:
    """
    Cumulative margin penalty: gamma ** (mismatches at positions >= i).

    Raises:
        InputValidationError: gamma < 1 or rankings of different length
    """
    PenaltyConfig(gamma=gamma)
    canon = np.asarray(canonical.permutation if isinstance(canonical, CanonicalRanking) else canonical)
    predicted = np.asarray(predicted_ranking)
    if predicted.shape != canon.shape:
        raise InputValidationError(
            f"predicted ranking has {predicted.size} positions, canonical has {canon.size}"
        )
    mismatches = (predicted != canon).astype(np.int64)
    tail_counts = np.cumsum(mismatches[..., ::-1], axis=-1)[..., ::-1]
    return np.power(float(gamma), tail_counts)


def _reference_matrix(profile: ThresholdProfile, n_classes: int, n_ranks: int) -> np.ndarray:
    ref = np.full((n_classes, n_ranks), np.nan)
    for c, vec in profile.per_class.items():
        if len(vec) != n_ranks:
            raise InputValidationError(f"profile has {len(vec)} ranks, canonical table has {n_ranks}")
        if 0 <= c < n_classes:
            ref[c] = vec
    return ref


def rankood_features(
    logits: LogitsLike,
    canon: CanonicalTable,
    profile: ThresholdProfile,
    gamma: float,
) -> np.ndarray:
    """Per-rank log-softmax(u) terms of every sample, shape (N, K+1)."""
    values = _logit_values(logits)
    order, ranked = _sorted_ranks(values, canon.K)
    predicted = order[:, 0]

    known = set(canon.rankings) & set(profile.per_class)
    missing = sorted({int(c) for c in np.unique(predicted)} - known)
    if missing:
        raise ScoringError(f"predicted classes {missing} have no canonical ranking or profile")

    perms = np.zeros((values.shape[1], canon.K + 1), dtype=np.int64)
    for c, ranking in canon.rankings.items():
        perms[c] = ranking.permutation
    delta = penalty_vector(order, perms[predicted], gamma)
    ref = _reference_matrix(profile, values.shape[1], canon.K + 1)
    u = ranked / delta - ref[predicted]
    return log_softmax(u, axis=1)


def _check_weights(weights: RankWeights, n_ranks: int) -> np.ndarray:
    if weights.n_ranks != n_ranks:
        raise InputValidationError(f"{weights.n_ranks} rank weights for {n_ranks} rank positions")
    return np.asarray(weights.w, dtype=np.float64)


def rankood_scores(
    logits: LogitsLike,
    canon: CanonicalTable,
    profile: ThresholdProfile,
    weights: RankWeights,
    gamma: float,
) -> np.ndarray:
    """RankOOD score of every row."""
    w = _check_weights(weights, canon.K + 1)
    return rankood_features(logits, canon, profile, gamma) @ w


def rankood_score(
    sample_logits,
    canon: CanonicalTable,
    profile: ThresholdProfile,
    weights: RankWeights,
    gamma: float,
) -> float:
    """RankOOD score of one sample."""
    vec = np.asarray(sample_logits, dtype=np.float64)
    if vec.ndim != 1:
        raise InputValidationError("sample logits must be a vector")
    return float(rankood_scores(vec, canon, profile, weights, gamma)[0])


def uniform_weights(K: int) -> RankWeights:
    """Equal weights 1 / (K + 1) over ranks 0..K."""
    return RankWeights(w=[1.0 / (K + 1)] * (K + 1))


def fit_weights(
    id_features: np.ndarray,
    ood_features: np.ndarray,
    ridge_lambda: float = DEFAULT_RIDGE_LAMBDA,
    allow_ridge: bool = True,
) -> RankWeights:
    """
    Least squares of ID = 1 / OOD = 0 labels on per-rank features.

    The intercept is fitted and then dropped from the weights. A
    rank-deficient design falls back to ridge regression and flags it.

    Raises:
        WeightFitError: too few rows, or rank deficiency with ridge disabled
    """
    X_id = np.asarray(id_features, dtype=np.float64)
    X_ood = np.asarray(ood_features, dtype=np.float64)
    if X_id.ndim != 2 or X_ood.ndim != 2 or X_id.shape[1] != X_ood.shape[1]:
        raise InputValidationError(
            f"feature matrices must share their column count, got {X_id.shape} and {X_ood.shape}"
        )
    n_ranks = X_id.shape[1]
    n_id, n_ood = X_id.shape[0], X_ood.shape[0]
    if n_id == 0 or n_ood == 0:
        raise WeightFitError("weight fitting needs both ID and OOD rows")
    if n_id + n_ood < n_ranks + 1:
        raise WeightFitError(f"weight fitting needs at least {n_ranks + 1} rows, got {n_id + n_ood}")

    X = np.vstack([X_id, X_ood])
    y = np.concatenate([np.ones(n_id), np.zeros(n_ood)])
    design_rank = np.linalg.matrix_rank(np.column_stack([np.ones(len(y)), X]))
    ridge_applied = design_rank < n_ranks + 1
    if ridge_applied:
        if not allow_ridge:
            raise WeightFitError(
                f"design matrix has rank {design_rank} < {n_ranks + 1}; enable the ridge fallback"
            )
        compute_logger.log_warning(
            "ood_scoring", "fit_weights", "rank-deficient design, using ridge",
            design_rank=int(design_rank), ridge_lambda=ridge_lambda,
        )
        model = Ridge(alpha=ridge_lambda, fit_intercept=True)
    else:
        model = LinearRegression(fit_intercept=True)
    model.fit(X, y)

    residual = y - model.predict(X)
    report = FitReport(
        r_squared=float(model.score(X, y)),
        residual_norm=float(np.linalg.norm(residual)),
        intercept=float(model.intercept_),
        ridge_applied=bool(ridge_applied),
        ridge_lambda=ridge_lambda if ridge_applied else 0.0,
        n_id=n_id,
        n_ood=n_ood,
    )
    compute_logger.log_operation("ood_scoring", "fit_weights", **report.model_dump())
    return RankWeights(w=[float(x) for x in model.coef_], fit_report=report)


def msp_scores(logits: LogitsLike) -> np.ndarray:
    """Maximum softmax probability of every row."""
    return softmax(_logit_values(logits), axis=1).max(axis=1)


def msp_score(sample_logits) -> float:
    """Maximum softmax probability of one sample, in (0, 1]."""
    vec = np.asarray(sample_logits, dtype=np.float64)
    if vec.ndim != 1 or vec.size == 0:
        raise InputValidationError("sample logits must be a non-empty vector")
    return float(msp_scores(vec)[0])


# ---------------------------------------------------------------------------
# JSON documents
# ---------------------------------------------------------------------------

def _write_json(document: str, path: Union[str, Path], kind: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    try:
        target.write_text(document + "\n", encoding="utf-8")
    except OSError as e:
        artifact_logger.log_error("write", str(target), str(e))
        raise
    artifact_logger.log_operation("write", str(target), format=kind)


def _read_json(path: Union[str, Path], kind: str) -> dict:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: {kind} is not valid JSON: {e}")
    artifact_logger.log_operation("read", str(path), format=kind)
    return payload


def write_profile(profile: ThresholdProfile, path: Union[str, Path]) -> None:
    _write_json(profile.model_dump_json(indent=2), path, "profile_json")


def read_profile(path: Union[str, Path]) -> ThresholdProfile:
    return ThresholdProfile.model_validate(_read_json(path, "profile_json"))


def write_weights(weights: RankWeights, path: Union[str, Path], gamma: Optional[float] = None) -> None:
    """Persist rank weights; gamma is recorded alongside for reference."""
    document = weights.model_dump()
    if gamma is not None:
        document["gamma"] = gamma
    _write_json(json.dumps(document, indent=2), path, "weights_json")


def read_weights(path: Union[str, Path]) -> RankWeights:
    return RankWeights.model_validate(_read_json(path, "weights_json"))
