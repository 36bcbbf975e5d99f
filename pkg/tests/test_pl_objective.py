"""
Tests for Plackett-Luce probabilities, ListMLE and the hybrid loss
"""
import itertools
import math

import numpy as np
import pytest

from pipeline.core.errors import ConsistencyError, InputValidationError
from pipeline.models.objective_models import RankTarget, SubsetMode
from pipeline.models.rank_models import CanonicalRanking
from rank_core.pl_objective import (
    cross_entropy,
    hybrid_grad,
    hybrid_loss,
    hybrid_loss_batch,
    listmle_grad,
    listmle_grad_batch,
    listmle_loss,
    listmle_loss_batch,
    pl_permutation_prob,
    select_rank_subset,
    subset_positions,
)


def _target(classes):
    return RankTarget(positions=list(range(len(classes))), classes=list(classes), count=len(classes))


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
def test_permutation_probabilities_sum_to_one(m, rng):
    logits = rng.normal(scale=2.0, size=m)
    total = math.fsum(pl_permutation_prob(logits[list(p)]) for p in itertools.permutations(range(m)))
    assert total == pytest.approx(1.0, abs=1e-10)


def test_permutation_prob_of_extreme_logits_stays_finite():
    assert pl_permutation_prob(np.array([1000.0, -1000.0])) == pytest.approx(1.0)
    assert pl_permutation_prob(np.array([-1000.0, 1000.0]), log_space=True) == pytest.approx(-2000.0)


def test_listmle_exact_values():
    assert listmle_loss([0.3, 1.2], _target([1])) == 0.0
    assert listmle_loss([0.0, 0.0, 0.0], _target([0, 1, 2])) == pytest.approx(math.log(6), abs=1e-12)
    assert listmle_loss([1.0, 0.0], _target([0, 1])) == pytest.approx(math.log1p(math.exp(-1)), abs=1e-12)


def test_shifting_all_logits_changes_nothing(rng):
    logits = rng.normal(scale=2.0, size=6)
    target = _target([4, 1, 5, 0])
    for shift in (-50.0, 7.25, 300.0):
        assert listmle_loss(logits + shift, target) == pytest.approx(listmle_loss(logits, target), abs=1e-12)
        assert pl_permutation_prob(logits + shift) == pytest.approx(pl_permutation_prob(logits), abs=1e-12)


def test_listmle_gradient_for_equal_logits():
    np.testing.assert_allclose(
        listmle_grad([0.0, 0.0, 0.0], _target([0, 1, 2])), [-2 / 3, -1 / 6, 5 / 6], rtol=0, atol=1e-12
    )
    # gradient lands on the target classes, whatever their column
    np.testing.assert_allclose(
        listmle_grad([0.0, 0.0, 0.0], _target([2, 0, 1])), [-1 / 6, 5 / 6, -2 / 3], rtol=0, atol=1e-12
    )
    assert not listmle_grad([0.4, -1.0, 2.0], _target([1])).any()


def test_listmle_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    h = 1e-5
    for _ in range(100):
        C = int(rng.integers(2, 21))
        logits = rng.normal(scale=2.0, size=C)
        m = int(rng.integers(1, C + 1))
        target = _target(rng.permutation(C)[:m].tolist())

        analytic = listmle_grad(logits, target)
        numeric = np.zeros(C)
        for k in range(C):
            step = np.zeros(C)
            step[k] = h
            numeric[k] = (listmle_loss(logits + step, target) - listmle_loss(logits - step, target)) / (2 * h)

        scale = np.maximum(np.abs(analytic), 1e-3)
        assert np.max(np.abs(analytic - numeric) / scale) <= 1e-5


def test_descending_order_minimises_listmle():
    rng = np.random.default_rng(5)
    for _ in range(200):
        m = int(rng.integers(2, 7))
        logits = rng.permutation(rng.normal(size=m))
        best = min(itertools.permutations(range(m)), key=lambda p: listmle_loss(logits, _target(p)))
        assert list(best) == np.argsort(-logits).tolist()


def test_hybrid_loss_parts(rng):
    logits = rng.normal(size=5)
    target = _target([2, 0, 4])
    value = hybrid_loss(logits, 2, target, alpha=0.5)

    assert value.ce_part == pytest.approx(cross_entropy(logits, 2))
    assert value.listmle_part == pytest.approx(listmle_loss(logits, target))
    assert value.total == pytest.approx(value.ce_part + 0.5 * value.listmle_part)


def test_hybrid_loss_two_classes_equal_logits():
    value = hybrid_loss([0.0, 0.0], 0, _target([0, 1]), alpha=1.0)
    assert value.ce_part == pytest.approx(math.log(2), abs=1e-12)
    assert value.listmle_part == pytest.approx(math.log(2), abs=1e-12)
    assert value.total == pytest.approx(2 * math.log(2), abs=1e-12)


def test_hybrid_loss_with_zero_alpha_is_cross_entropy(rng):
    logits = rng.normal(size=4)
    target = _target([1, 3])
    assert hybrid_loss(logits, 1, target, alpha=0.0).total == cross_entropy(logits, 1)


def test_hybrid_loss_rejects_label_mismatch(rng):
    with pytest.raises(ConsistencyError):
        hybrid_loss(rng.normal(size=4), 0, _target([1, 0]), alpha=1.0)


def test_batched_forms_agree_with_single_sample(rng):
    logits = rng.normal(size=(6, 5))
    targets = np.array([rng.permutation(5)[:3] for _ in range(6)])
    labels = targets[:, 0]

    losses = listmle_loss_batch(logits, targets)
    grads = listmle_grad_batch(logits, targets)
    ce, lm, hybrid = hybrid_loss_batch(logits, labels, targets, alpha=0.7)
    for i in range(6):
        target = _target(targets[i].tolist())
        assert losses[i] == pytest.approx(listmle_loss(logits[i], target), abs=1e-12)
        np.testing.assert_allclose(grads[i], listmle_grad(logits[i], target), atol=1e-12)
        np.testing.assert_allclose(hybrid[i], hybrid_grad(logits[i], int(labels[i]), target, 0.7), atol=1e-12)
    np.testing.assert_allclose(lm, losses)


def test_batched_hybrid_rejects_label_mismatch(rng):
    targets = np.array([[0, 1], [1, 0]])
    with pytest.raises(ConsistencyError, match="row 1"):
        hybrid_loss_batch(rng.normal(size=(2, 3)), np.array([0, 2]), targets, alpha=1.0)


@pytest.mark.parametrize(
    "mode, count, expected",
    [
        (SubsetMode.TOP, 3, [0, 1, 2]),
        (SubsetMode.BOTTOM, 3, [0, 4, 5]),
        (SubsetMode.TOP_BOTTOM, 4, [0, 1, 4, 5]),
        (SubsetMode.TOP_BOTTOM, 3, [0, 1, 5]),
        (SubsetMode.FULL, 1, [0, 1, 2, 3, 4, 5]),
    ],
)
def test_subset_positions(mode, count, expected):
    assert subset_positions(5, mode, count) == expected


def test_top_bottom_on_a_long_ranking():
    assert subset_positions(99, SubsetMode.TOP_BOTTOM, 20) == list(range(10)) + list(range(90, 100))


def test_subset_size_out_of_range():
    with pytest.raises(InputValidationError):
        subset_positions(4, SubsetMode.TOP, 6)


def test_select_rank_subset_keeps_canonical_classes():
    canonical = CanonicalRanking(predicted_class=3, permutation=[3, 0, 4, 1, 2], objective_value=2.0, support_count=5)
    target = select_rank_subset(canonical, SubsetMode.BOTTOM, 2)
    assert target.positions == [0, 4]
    assert target.classes == [3, 2]
    assert target.true_class == 3
