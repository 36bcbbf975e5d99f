"""
Tests for AUROC / FPR, CP matrices, rank-logit summaries and reports
"""
import json

import numpy as np
import pytest

from ood_metrics import (
    auroc,
    cp_matrix,
    cp_mean,
    evaluate_detector,
    fpr_at_tpr,
    id_accuracy,
    rank_logit_summary,
    summarize_seeds,
    write_report_json,
)
from ood_metrics.metrics_eval import default_summary_positions
from ood_metrics.reports import read_scores_csv, write_scores_csv
from pipeline.core.errors import InputValidationError
from pipeline.models.logit_models import LogitMatrix


def _pairwise_auroc(id_scores, ood_scores):
    diff = id_scores[:, None] - ood_scores[None, :]
    return float(np.mean((diff > 0) + 0.5 * (diff == 0)))


def test_auroc_matches_pairwise_count():
    rng = np.random.default_rng(3)
    for _ in range(100):
        id_scores = np.round(rng.normal(0.5, 1.0, size=int(rng.integers(1, 40))), 1)
        ood_scores = np.round(rng.normal(size=int(rng.integers(1, 40))), 1)
        assert auroc(id_scores, ood_scores) == pytest.approx(_pairwise_auroc(id_scores, ood_scores), abs=1e-12)


def test_auroc_is_symmetric_and_rank_based():
    rng = np.random.default_rng(8)
    for _ in range(50):
        a = np.round(rng.normal(0.3, 1.0, size=int(rng.integers(1, 30))), 1)
        b = np.round(rng.normal(size=int(rng.integers(1, 30))), 1)
        assert auroc(a, b) + auroc(b, a) == pytest.approx(1.0, abs=1e-12)
        assert auroc(np.exp(a), np.exp(b)) == pytest.approx(auroc(a, b), abs=1e-12)
        assert auroc(3.0 * a - 2.0, 3.0 * b - 2.0) == pytest.approx(auroc(a, b), abs=1e-12)


def test_same_multiset_gives_half():
    scores = [0.2, 0.5, 0.5, 0.9]
    assert auroc(scores, list(reversed(scores))) == 0.5


def test_perfect_separation():
    id_scores, ood_scores = np.arange(10, 20), np.arange(0, 10)
    assert auroc(id_scores, ood_scores) == 1.0
    fpr, threshold = fpr_at_tpr(id_scores, ood_scores)
    assert fpr == 0.0
    assert threshold == 10


def test_identical_distributions_keep_most_ood():
    scores = np.random.default_rng(0).normal(size=200)
    fpr, _ = fpr_at_tpr(scores, scores.copy())
    assert fpr >= 0.95 - 1 / 200


def test_fpr_threshold_is_kth_largest_id_score():
    id_scores = np.arange(1, 21, dtype=float)
    fpr, threshold = fpr_at_tpr(id_scores, np.array([1.5, 2.0, 2.5, 30.0]), tpr=0.95)
    assert threshold == 2.0
    assert fpr == 0.75


def test_full_tpr_uses_minimum_id_score():
    fpr, threshold = fpr_at_tpr([3.0, 1.0, 2.0, 5.0], [0.5, 1.0, 4.0], tpr=1.0)
    assert threshold == 1.0
    assert fpr == pytest.approx(2 / 3)


def test_empty_scores_rejected():
    with pytest.raises(InputValidationError):
        auroc([], [1.0])


def test_id_accuracy():
    logits = LogitMatrix(data=[[2.0, 1.0], [0.0, 1.0], [3.0, 0.0]], labels=[0, 1, 1])
    assert id_accuracy(logits) == pytest.approx(2 / 3)


def test_cp_matrix_conditions_on_earlier_ranks(identity_table):
    logits = LogitMatrix(data=[
        [4.0, 3.0, 2.0, 1.0],  # 0 | 1 2 3: all canonical
        [4.0, 3.0, 1.0, 2.0],  # 0 | 1 3 2: breaks at rank 2
        [4.0, 1.0, 3.0, 2.0],  # 0 | 2 3 1: breaks at rank 1
        [1.0, 4.0, 2.0, 3.0],  # 1 | 3 2 0: breaks at rank 1
    ])
    cp = cp_matrix(logits, identity_table)

    assert cp.per_class[0] == [pytest.approx(2 / 3), 0.5, 1.0]
    assert cp.denominators[0] == [3, 2, 1]
    assert cp.per_class[1] == [0.0, None, None]
    assert cp.per_class[2] == [None, None, None]
    assert cp_mean(cp) == pytest.approx((2 / 3 + 0.5 + 1.0 + 0.0) / 4)


def test_rank_logit_summary(identity_table):
    logits = LogitMatrix(data=[[4.0, 3.0, 2.0, 1.0], [6.0, 1.0, 0.0, 5.0]])
    summaries = rank_logit_summary(logits, identity_table, [0, 3], bins=4)

    assert [s.position for s in summaries] == [0, 3]
    assert summaries[0].mean == 5.0
    assert summaries[0].std == 1.0
    assert sum(summaries[1].histogram) == 2
    assert summaries[0].bin_edges == summaries[1].bin_edges
    with pytest.raises(InputValidationError):
        rank_logit_summary(logits, identity_table, [4])


def test_default_summary_positions():
    assert default_summary_positions(7) == [0, 3, 7]
    assert default_summary_positions(1) == [0, 1]


def test_report_json_carries_scores_and_metrics(tmp_path):
    report = evaluate_detector("rankood", [0.9, 0.8, 0.7], [0.1, 0.75], ood_group="near")
    path = tmp_path / "report.json"
    write_report_json([report], path, config_echo={"tpr": 0.95}, extra={"cp_mean": {"rank_test_id": 0.9}})

    document = json.loads(path.read_text(encoding="utf-8"))
    entry = document["reports"][0]
    assert entry["detector"] == "rankood"
    assert entry["ood_scores"] == [0.1, 0.75]
    assert entry["auroc"] == pytest.approx(5 / 6)
    assert document["cp_mean"] == {"rank_test_id": 0.9}


def test_scores_csv_reads_back(tmp_path):
    scores = {"msp": np.array([0.5, 0.25]), "rankood": np.array([-1.0, 2.0])}
    write_scores_csv(scores, tmp_path / "scores.csv")
    loaded = read_scores_csv(tmp_path / "scores.csv")
    assert sorted(loaded) == ["msp", "rankood"]
    np.testing.assert_array_equal(loaded["rankood"], scores["rankood"])


def test_seed_summary_uses_population_std():
    reports = {
        seed: [evaluate_detector("msp", [1.0, 2.0], [value, 0.0], ood_group="near")]
        for seed, value in [(0, 1.5), (1, 3.0)]
    }
    (summary,) = summarize_seeds(reports)
    assert summary.seeds == [0, 1]
    assert summary.auroc_mean == pytest.approx(0.625)
    assert summary.auroc_std == pytest.approx(0.125)
