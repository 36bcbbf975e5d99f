"""
Tests for threshold profiles, penalties, RankOOD / MSP scores and the detector registry
"""
import math

import numpy as np
import pytest
from scipy.special import log_softmax

from ood_scorers.base_scorer import ScoringContext
from ood_scorers.ood_scoring import (
    build_profile,
    fit_weights,
    msp_score,
    nearest_rank_percentile,
    penalty_vector,
    rankood_features,
    rankood_score,
    rankood_scores,
    read_profile,
    uniform_weights,
    write_profile,
)
from ood_scorers.registry import ScorerRegistry
from pipeline.core.errors import (
    DependencyError,
    DetectorUnavailableError,
    InputValidationError,
    ProfileError,
    ScoringError,
    WeightFitError,
)
from pipeline.models.logit_models import LogitMatrix
from pipeline.models.scoring_models import RankWeights, ThresholdProfile


def _profile(values, K=3, n_classes=4):
    return ThresholdProfile(
        per_class={c: list(values) for c in range(n_classes)}, percentile=0.95, n_min_correct=K + 1
    )


def test_nearest_rank_percentile():
    assert nearest_rank_percentile(np.arange(1, 21), 0.95) == 19
    assert nearest_rank_percentile(np.array([4.0]), 0.5) == 4.0
    assert nearest_rank_percentile(np.arange(1, 11), 0.1) == 1


def test_penalty_is_one_when_rankings_agree():
    np.testing.assert_array_equal(penalty_vector([2, 0, 1, 3], [2, 0, 1, 3], gamma=1.5), np.ones(4))
    np.testing.assert_array_equal(penalty_vector([2, 3, 1, 0], [2, 0, 1, 3], gamma=1.0), np.ones(4))


def test_penalty_counts_mismatches_at_or_below_each_rank():
    delta = penalty_vector([0, 2, 1, 3], [0, 1, 2, 3], gamma=2.0)
    np.testing.assert_array_equal(delta, [4.0, 4.0, 2.0, 1.0])


def test_penalty_grows_with_gamma_and_mismatches():
    canonical = [0, 1, 2, 3, 4]
    one_swap = [0, 1, 2, 4, 3]
    two_swaps = [0, 2, 1, 4, 3]
    previous = penalty_vector(one_swap, canonical, gamma=1.0)
    for gamma in (1.25, 1.5, 2.0, 3.0):
        current = penalty_vector(one_swap, canonical, gamma=gamma)
        assert np.all(current >= previous)
        assert np.all(current[:5] > previous[:5])
        previous = current

    fewer = penalty_vector(one_swap, canonical, gamma=1.5)
    more = penalty_vector(two_swaps, canonical, gamma=1.5)
    assert np.all(more >= fewer)
    assert np.all(more[:3] > fewer[:3])


def test_penalty_rejects_gamma_below_one():
    with pytest.raises(InputValidationError):
        penalty_vector([0, 1], [0, 1], gamma=0.5)


def test_rankood_score_by_hand(identity_table):
    logits = np.array([4.0, 1.0, 3.0, 0.0])
    profile = _profile([3.0, 2.0, 1.0, 0.0])
    weights = RankWeights(w=[0.4, 0.3, 0.2, 0.1])

    # ranked classes 0, 2, 1, 3 against canonical 0, 1, 2, 3
    delta = np.array([4.0, 4.0, 2.0, 1.0])
    u = np.array([4.0, 3.0, 1.0, 0.0]) / delta - np.array([3.0, 2.0, 1.0, 0.0])
    expected = float(np.dot(log_softmax(u), weights.w))

    assert rankood_score(logits, identity_table, profile, weights, gamma=2.0) == pytest.approx(expected, abs=1e-12)


def test_batch_scores_match_single_scores(identity_table, rng):
    logits = rng.normal(size=(10, 4))
    profile = _profile([1.0, 0.5, 0.0, -0.5])
    weights = uniform_weights(3)
    batch = rankood_scores(logits, identity_table, profile, weights, gamma=1.5)
    for i in range(10):
        assert batch[i] == pytest.approx(rankood_score(logits[i], identity_table, profile, weights, 1.5))


def test_scoring_needs_profile_for_predicted_class(identity_table):
    profile = ThresholdProfile(per_class={0: [0.0] * 4}, n_min_correct=1)
    with pytest.raises(ScoringError):
        rankood_features(np.array([[0.0, 5.0, 1.0, 2.0]]), identity_table, profile, 1.5)


def test_profile_from_matching_samples(identity_table, rng):
    labels = np.repeat(np.arange(4), 30)
    data = np.zeros((120, 4))
    for i, c in enumerate(labels):
        # canonical order c, then the others ascending, with decreasing logits
        order = [c] + [k for k in range(4) if k != c]
        data[i, order] = np.array([6.0, 3.0, 2.0, 1.0]) + rng.uniform(0, 0.1)
    profile = build_profile(LogitMatrix(data=data, labels=labels), identity_table, percentile=0.95)

    assert profile.n_min_correct == 4
    assert profile.support == {0: 30, 1: 30, 2: 30, 3: 30}
    assert profile.per_class[0][0] > profile.per_class[0][1] > profile.per_class[0][3]


def _canonical_logits(rng, per_class, noise):
    labels = np.repeat(np.arange(4), per_class)
    data = np.zeros((labels.size, 4))
    for i, c in enumerate(labels):
        order = [c] + [k for k in range(4) if k != c]
        data[i, order] = np.array([6.0, 3.0, 2.0, 1.0]) + rng.uniform(0, noise, size=4)
    return LogitMatrix(data=data, labels=labels)


@pytest.mark.parametrize("percentile", [0.5, 0.9, 0.95])
def test_profile_percentile_bounds_exceedances(identity_table, rng, percentile):
    logits = _canonical_logits(rng, 30, noise=0.5)
    profile = build_profile(logits, identity_table, percentile=percentile)

    # every sample follows its canonical ranking, so all of them qualify
    allowed = math.ceil((1 - percentile) * 30)
    for c in range(4):
        ranked = -np.sort(-logits.data[logits.labels == c], axis=1)
        for i in range(4):
            assert np.sum(ranked[:, i] > profile.per_class[c][i]) <= allowed


def test_identical_samples_give_their_sorted_logits(identity_table, rng):
    logits = _canonical_logits(rng, 12, noise=0.0)
    profile = build_profile(logits, identity_table, percentile=0.95)
    for c in range(4):
        assert profile.per_class[c] == [6.0, 3.0, 2.0, 1.0]


def test_profile_names_classes_without_correct_samples(identity_table):
    logits = LogitMatrix(data=[[3.0, 1.0, 0.0, 0.0], [3.0, 1.0, 0.0, 0.0]], labels=[0, 1])
    with pytest.raises(ProfileError) as excinfo:
        build_profile(logits, identity_table)
    assert excinfo.value.classes == [1]


def test_profile_json_reads_back(tmp_path):
    profile = _profile([2.5, 1.0, 0.25, -1.0])
    write_profile(profile, tmp_path / "profile.json")
    assert read_profile(tmp_path / "profile.json") == profile


def test_fit_weights_recovers_linear_labels(rng):
    id_features = rng.normal(loc=1.0, size=(50, 3))
    ood_features = rng.normal(loc=-1.0, size=(50, 3))
    weights = fit_weights(id_features, ood_features)

    assert weights.n_ranks == 3
    assert not weights.fit_report.ridge_applied
    assert weights.fit_report.n_id == 50
    features = np.vstack([id_features, ood_features])
    labels = np.concatenate([np.ones(50), np.zeros(50)])
    predictions = features @ np.asarray(weights.w) + weights.fit_report.intercept
    assert np.mean((predictions > 0.5) == labels) > 0.8


def test_fit_weights_finds_no_signal_in_identical_distributions(rng):
    features = rng.normal(size=(40, 3))
    weights = fit_weights(features, features.copy())
    np.testing.assert_allclose(weights.w, 0.0, atol=1e-10)
    assert weights.fit_report.r_squared == pytest.approx(0.0, abs=1e-10)


def test_fit_weights_falls_back_to_ridge_on_collinear_features(rng):
    base = rng.normal(size=(20, 1))
    id_features = np.hstack([base, base])
    ood_features = np.hstack([base - 1.0, base - 1.0])
    weights = fit_weights(id_features, ood_features)
    assert weights.fit_report.ridge_applied
    assert all(math.isfinite(w) for w in weights.w)
    with pytest.raises(WeightFitError):
        fit_weights(id_features, ood_features, allow_ridge=False)


def test_fit_weights_needs_both_sides():
    with pytest.raises(WeightFitError):
        fit_weights(np.ones((5, 2)), np.zeros((0, 2)))


def test_msp_score():
    assert msp_score(np.array([0.0, 0.0])) == pytest.approx(0.5)
    assert msp_score(np.array([1000.0, 0.0, 0.0])) == pytest.approx(1.0)


def test_msp_ignores_a_constant_shift(rng):
    logits = rng.normal(size=5)
    assert msp_score(logits + 40.0) == pytest.approx(msp_score(logits), abs=1e-12)
    assert msp_score(np.array([10.0, 0.0, 0.0])) == pytest.approx(math.exp(10) / (math.exp(10) + 2), abs=1e-12)


def test_registry_discovers_both_detectors():
    assert {"msp", "rankood"} <= set(ScorerRegistry.list_scorers())


def test_rankood_detector_requires_canonical_table():
    scorer = ScorerRegistry.get_scorer("rankood")
    with pytest.raises(DependencyError, match="canon"):
        scorer.score(LogitMatrix(data=np.eye(4)), ScoringContext())


def test_rankood_detector_defaults_to_uniform_weights(identity_table, rng):
    logits = LogitMatrix(data=rng.normal(size=(6, 4)))
    profile = _profile([1.0, 0.0, -1.0, -2.0])
    context = ScoringContext(canonical_table=identity_table, profile=profile, gamma=1.5)
    np.testing.assert_allclose(
        ScorerRegistry.get_scorer("rankood").score(logits, context),
        rankood_scores(logits, identity_table, profile, uniform_weights(3), 1.5),
    )


def test_missing_required_detector_names_the_failed_plugin(monkeypatch):
    msp = ScorerRegistry.get_scorer("msp")
    monkeypatch.setattr(ScorerRegistry, "_scorers", {"msp": msp})
    monkeypatch.setattr(ScorerRegistry, "_failed", {"rankood.py": "No module named 'missing_dep'"})
    monkeypatch.setattr(ScorerRegistry, "_initialized", True)

    with pytest.raises(DetectorUnavailableError) as excinfo:
        ScorerRegistry.require_scorers(["msp", "rankood"])
    assert excinfo.value.names == ["rankood"]
    assert excinfo.value.exit_code == 3
    assert "rankood.py" in str(excinfo.value)
    assert list(ScorerRegistry.require_scorers(["msp"])) == ["msp"]
