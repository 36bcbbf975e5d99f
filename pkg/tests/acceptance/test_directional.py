"""
Directional checks of the full pipeline on the default synthetic problem

Run with ``pytest -m acceptance``.
"""
import time

import numpy as np
import pytest

from pipeline.models.logit_models import LogitMatrix
from pipeline.models.pipeline_models import PipelineConfig
from pipeline.services.stage_service import StageService
from rank_core.canonical_ranks import solve_assignment, solve_assignment_bruteforce
from rank_core.rank_stats import compute_rpm

SEEDS = [0, 1, 2]
PIPELINE_BUDGET_S = 300.0
ASSIGNMENT_BUDGET_S = 10.0

pytestmark = pytest.mark.acceptance


@pytest.fixture(scope="module")
def timed_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    results = {}
    started = time.perf_counter()
    for seed in SEEDS:
        config = PipelineConfig.model_validate({
            "synthetic": {"n_classes": 8, "feature_dim": 16, "seed": seed},
            "ce_train": {"alpha": 0.0, "seed": seed},
            "rank_train": {"seed": seed},
            "out_dir": str(root / f"seed_{seed}"),
        })
        results[seed] = StageService(config).run_stages()
    return results, time.perf_counter() - started


@pytest.fixture(scope="module")
def runs(timed_runs):
    return timed_runs[0]


def _auroc(result, detector, group):
    return next(m["auroc"] for m in result["metrics"] if m["detector"] == detector and m["ood_group"] == group)


def test_three_seeds_fit_the_time_budget(timed_runs):
    assert timed_runs[1] < PIPELINE_BUDGET_S


def test_rankood_beats_msp_on_near_ood(runs):
    wins = sum(_auroc(r, "rankood", "near") > _auroc(r, "msp", "near") for r in runs.values())
    assert wins >= 2


@pytest.mark.parametrize("seed", SEEDS)
def test_rank_training_raises_conditional_probabilities(runs, seed):
    cp_mean = runs[seed]["cp_mean"]
    assert cp_mean["rank_test_id"] - cp_mean["ce_test_id"] >= 0.05


@pytest.mark.parametrize("seed", SEEDS)
@pytest.mark.parametrize("group", ["near", "far"])
def test_id_scores_exceed_ood_scores(runs, seed, group):
    scores = runs[seed]["mean_score"]["rankood"]
    assert scores["id"] - scores[group] > 0


def test_assignment_oracle_fits_the_time_budget():
    rng = np.random.default_rng(7)
    started = time.perf_counter()
    for _ in range(1000):
        n_classes = int(rng.integers(3, 9))
        K = int(rng.integers(1, min(6, n_classes - 1) + 1))
        n_samples = int(rng.integers(1, 12))
        data = rng.normal(size=(n_samples, n_classes))
        data[:, 0] += 20.0
        rpm = compute_rpm(LogitMatrix(data=data, labels=np.zeros(n_samples, dtype=np.int64)), 0, K=K)
        assert solve_assignment(rpm).objective_value == pytest.approx(
            solve_assignment_bruteforce(rpm).objective_value, abs=1e-12
        )
    assert time.perf_counter() - started < ASSIGNMENT_BUDGET_S
