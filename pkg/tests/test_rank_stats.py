"""
Tests for rank orders and rank probability matrices
"""
import numpy as np
import pytest

from pipeline.core.errors import InputValidationError
from pipeline.models.logit_models import LogitMatrix
from rank_core.rank_stats import (
    compute_rpm,
    compute_rpm_table,
    rank_order,
    read_rpm_table,
    write_rpm_table,
)


def test_rank_order_breaks_ties_by_class_index():
    order = rank_order(np.array([[1.0, 3.0, 3.0, 0.0]]))
    np.testing.assert_array_equal(order, [[1, 2, 0, 3]])


def test_fixture_probabilities_are_exact(rank_fixture, rank_fixture_logits):
    rpm = compute_rpm(rank_fixture_logits, rank_fixture["target_class"], K=rank_fixture["K"])

    assert rpm.support_count == 100
    assert rpm.candidate_classes == [0, 1, 3, 4]
    for expected in rank_fixture["expected"]["probabilities"]:
        assert rpm.prob(expected["class"], expected["rank"]) == expected["value"]


def test_rank_columns_are_distributions(rank_fixture_logits):
    rpm = compute_rpm(rank_fixture_logits, 2)
    assert rpm.K == 4
    np.testing.assert_allclose(rpm.probs.sum(axis=0), 1.0, atol=1e-12)
    np.testing.assert_array_equal(rpm.counts.sum(axis=0), 100)


def test_misclassified_samples_are_ignored():
    logits = LogitMatrix(
        data=[[3.0, 2.0, 1.0], [3.0, 1.0, 2.0], [1.0, 3.0, 2.0]],
        labels=[0, 0, 0],
    )
    rpm = compute_rpm(logits, 0)
    assert rpm.support_count == 2
    np.testing.assert_array_equal(rpm.counts, [[1, 1], [1, 1]])


def test_empty_support_gives_zero_matrix():
    logits = LogitMatrix(data=[[1.0, 2.0, 0.0]], labels=[0])
    rpm = compute_rpm(logits, 0)
    assert rpm.is_empty
    assert not rpm.probs.any()


@pytest.mark.parametrize("K", [0, 3])
def test_k_outside_range_rejected(K):
    logits = LogitMatrix(data=np.eye(3), labels=[0, 1, 2])
    with pytest.raises(InputValidationError, match="K must lie"):
        compute_rpm(logits, 0, K=K)


def test_unlabelled_logits_rejected():
    with pytest.raises(InputValidationError, match="no labels"):
        compute_rpm(LogitMatrix(data=np.eye(3)), 0)


def test_table_matches_single_class_results(rng):
    labels = rng.integers(0, 5, size=300)
    data = rng.normal(size=(300, 5))
    data[np.arange(300), labels] += 3.0
    logits = LogitMatrix(data=data, labels=labels)

    table = compute_rpm_table(logits, K=2, max_workers=3)

    assert sorted(table) == [0, 1, 2, 3, 4]
    for c, rpm in table.items():
        np.testing.assert_array_equal(rpm.counts, compute_rpm(logits, c, K=2).counts)


def test_rpm_table_csv_reads_back(tmp_path, rng):
    labels = rng.integers(0, 4, size=120)
    data = rng.normal(size=(120, 4))
    data[np.arange(120), labels] += 2.0
    table = compute_rpm_table(LogitMatrix(data=data, labels=labels))

    path = tmp_path / "rpm_table.csv"
    write_rpm_table(table, path)
    loaded = read_rpm_table(path)

    for c in table:
        assert loaded[c].support_count == table[c].support_count
        np.testing.assert_array_equal(loaded[c].counts, table[c].counts)
        np.testing.assert_allclose(loaded[c].probs, table[c].probs, rtol=0, atol=1e-15)


def _tally_by_loop(data, labels, target_class, K):
    n_classes = data.shape[1]
    candidates = [k for k in range(n_classes) if k != target_class]
    counts = np.zeros((n_classes - 1, K), dtype=np.int64)
    for row, label in zip(data, labels):
        ranked = sorted(range(n_classes), key=lambda k: -row[k])
        if ranked[0] != label or label != target_class:
            continue
        for j in range(1, K + 1):
            counts[candidates.index(ranked[j]), j - 1] += 1
    return counts


def test_counts_match_a_row_by_row_tally():
    rng = np.random.default_rng(21)
    labels = rng.integers(0, 5, size=200)
    data = rng.normal(size=(200, 5))
    data[np.arange(200), labels] += 1.5
    logits = LogitMatrix(data=data, labels=labels)

    for c in range(5):
        rpm = compute_rpm(logits, c, K=3)
        expected = _tally_by_loop(logits.data, labels, c, 3)
        np.testing.assert_array_equal(rpm.counts, expected)
        assert rpm.support_count == int(np.sum((np.argmax(logits.data, axis=1) == labels) & (labels == c)))


def test_relabelling_classes_permutes_rows():
    rng = np.random.default_rng(4)
    labels = rng.integers(0, 4, size=150)
    data = rng.normal(size=(150, 4))
    data[np.arange(150), labels] += 2.0
    sigma = np.array([2, 0, 3, 1])
    relabelled_data = np.empty_like(data)
    relabelled_data[:, sigma] = data

    original = LogitMatrix(data=data, labels=labels)
    relabelled = LogitMatrix(data=relabelled_data, labels=sigma[labels])

    for c in range(4):
        before = compute_rpm(original, c)
        after = compute_rpm(relabelled, int(sigma[c]))
        assert after.support_count == before.support_count
        for k in before.candidate_classes:
            for rank in range(1, 4):
                assert after.prob(int(sigma[k]), rank) == before.prob(k, rank)
