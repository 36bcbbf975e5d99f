"""
Shared pytest fixtures
"""
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent / "data"))

from load_test_data import fixture_logits, load_fixture  # noqa: E402

from pipeline.models.pipeline_models import PipelineConfig  # noqa: E402
from pipeline.models.rank_models import CanonicalRanking, CanonicalTable  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def rank_fixture():
    return load_fixture()


@pytest.fixture(scope="session")
def rank_fixture_logits(rank_fixture):
    return fixture_logits(rank_fixture)


@pytest.fixture
def identity_table():
    """Canonical table over 4 classes where every class ranks the others ascending."""
    rankings = {}
    for c in range(4):
        perm = [c] + [k for k in range(4) if k != c]
        rankings[c] = CanonicalRanking(predicted_class=c, permutation=perm, objective_value=3.0, support_count=10)
    return CanonicalTable(n_classes=4, K=3, rankings=rankings)


@pytest.fixture
def small_config(tmp_path):
    """A pipeline small enough to run every stage in a few seconds."""
    return PipelineConfig.model_validate({
        "synthetic": {
            "n_classes": 4,
            "feature_dim": 6,
            "samples_per_class": 60,
            "eval_samples_per_class": 30,
            "class_separation": 10.0,
            "seed": 3,
        },
        "ce_train": {"epochs": 8, "batch_size": 32, "alpha": 0.0, "learning_rate": 0.05, "seed": 3},
        "rank_train": {"epochs": 8, "batch_size": 32, "learning_rate": 0.05, "seed": 3},
        "hidden_sizes": [16],
        "out_dir": str(tmp_path / "run"),
    })
