"""
End-to-end tests of the command-line stages on a small synthetic problem
"""
import json

import pytest

from load_test_data import fixture_logits
from main_app import main
from ood_scorers.registry import ScorerRegistry
from utilities.tensor_io import write_logits

STAGES = ["synth", "train-ce", "rpm", "canon", "train-rank", "profile", "score", "eval"]


@pytest.fixture
def config_file(tmp_path, small_config):
    path = tmp_path / "config.json"
    path.write_text(small_config.to_json(), encoding="utf-8")
    return path


def _run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _ledger(run_dir):
    return json.loads((run_dir / "artifacts.json").read_text(encoding="utf-8"))


def test_synth_is_reproducible(capsys, tmp_path, config_file):
    run_dir = tmp_path / "run"
    code, out, _ = _run(capsys, "synth", "--config", str(config_file), "--out", str(run_dir), "--seed", "7")
    assert code == 0
    first = json.loads(out)["artifacts"]
    assert "synth/manifest.json" in first
    assert "synth/config.json" in first
    echoed = json.loads((run_dir / "synth" / "config.json").read_text(encoding="utf-8"))
    assert echoed["synthetic"]["seed"] == 7
    assert echoed["percentile"] == 0.95

    code, out, _ = _run(capsys, "synth", "--config", str(config_file), "--out", str(run_dir), "--seed", "7")
    assert code == 0
    assert json.loads(out)["artifacts"] == first


def test_two_classes_is_a_validation_failure(capsys, tmp_path):
    code, _, err = _run(capsys, "synth", "--classes", "2", "--out", str(tmp_path / "run"))
    assert code == 2
    assert "at least 3 classes" in err


def test_unknown_flag_is_a_usage_error(capsys, tmp_path):
    code, _, _ = _run(capsys, "canon", "--no-such-flag")
    assert code == 2


def test_stage_without_inputs_names_the_producer(capsys, tmp_path, config_file):
    code, _, err = _run(capsys, "profile", "--config", str(config_file), "--out", str(tmp_path / "empty"))
    assert code == 3
    assert "`canon`" in err


def test_full_chain_and_missing_canonical_table(capsys, tmp_path, config_file):
    run_dir = tmp_path / "run"
    for stage in STAGES:
        code, _, err = _run(capsys, stage, "--config", str(config_file), "--out", str(run_dir))
        assert code == 0, f"{stage} failed: {err}"

    report = json.loads((run_dir / "eval" / "report.json").read_text(encoding="utf-8"))
    pairs = {(r["detector"], r["ood_group"]) for r in report["reports"]}
    assert pairs == {("msp", "near"), ("msp", "far"), ("rankood", "near"), ("rankood", "far")}
    assert all(0.0 <= r["auroc"] <= 1.0 for r in report["reports"])
    assert set(report["id_accuracy"]) == {"ce", "rank"}
    for stage_dir in ["synth", "train_ce", "rpm", "canon", "train_rank", "profile", "score", "eval"]:
        assert (run_dir / stage_dir / "config.json").exists()
    assert (run_dir / "eval" / "metrics.csv").exists()
    assert (run_dir / "eval" / "cp_rank_test_id.csv").exists()

    (run_dir / "canon" / "canonical_table.json").unlink()
    code, _, err = _run(capsys, "profile", "--config", str(config_file), "--out", str(run_dir))
    assert code == 3
    assert "`canon`" in err


def test_modified_upstream_file_is_stale(capsys, tmp_path, config_file):
    run_dir = tmp_path / "run"
    for stage in ["synth", "train-ce", "rpm"]:
        assert _run(capsys, stage, "--config", str(config_file), "--out", str(run_dir))[0] == 0

    with open(run_dir / "rpm" / "rpm_table.csv", "a", encoding="utf-8") as handle:
        handle.write("\n")
    code, _, err = _run(capsys, "canon", "--config", str(config_file), "--out", str(run_dir))
    assert code == 3
    assert "`rpm`" in err


def test_external_logits_enter_at_the_rpm_stage(capsys, tmp_path, rank_fixture):
    logits_path = tmp_path / "fixture.bin"
    write_logits(fixture_logits(rank_fixture), logits_path)
    run_dir = tmp_path / "run"

    code, out, _ = _run(capsys, "rpm", "--logits", str(logits_path), "--rank-k", "3", "--out", str(run_dir))
    assert code == 0
    assert json.loads(out)["support"]["2"] == 100

    # only class 2 has correctly classified samples
    code, _, err = _run(capsys, "canon", "--out", str(run_dir))
    assert code == 4
    assert "[0, 1, 3, 4]" in err


def test_run_all_is_idempotent(capsys, tmp_path, config_file):
    run_dir = tmp_path / "run"
    assert _run(capsys, "run-all", "--config", str(config_file), "--out", str(run_dir))[0] == 0
    first = _ledger(run_dir)

    assert _run(capsys, "run-all", "--config", str(config_file), "--out", str(run_dir))[0] == 0
    assert _ledger(run_dir) == first


def test_run_all_over_seeds_writes_summary(capsys, tmp_path, config_file):
    run_dir = tmp_path / "run"
    code, out, _ = _run(
        capsys, "run-all", "--config", str(config_file), "--out", str(run_dir), "--seeds", "0", "1"
    )
    assert code == 0
    summary = json.loads(out)["summary"]
    assert {(s["detector"], s["ood_group"]) for s in summary} == {
        ("msp", "near"), ("msp", "far"), ("rankood", "near"), ("rankood", "far")
    }
    assert all(s["seeds"] == [0, 1] for s in summary)
    assert (run_dir / "seed_0" / "eval" / "report.json").exists()
    assert (run_dir / "summary.csv").exists()


def test_score_fails_when_a_detector_did_not_load(capsys, tmp_path, config_file, monkeypatch):
    run_dir = tmp_path / "run"
    for stage in STAGES[:6]:
        assert _run(capsys, stage, "--config", str(config_file), "--out", str(run_dir))[0] == 0

    msp = ScorerRegistry.get_scorer("msp")
    monkeypatch.setattr(ScorerRegistry, "_scorers", {"msp": msp})
    monkeypatch.setattr(ScorerRegistry, "_failed", {"rankood.py": "import failed"})
    monkeypatch.setattr(ScorerRegistry, "_initialized", True)

    code, _, err = _run(capsys, "score", "--config", str(config_file), "--out", str(run_dir))
    assert code == 3
    assert "rankood" in err
    assert not (run_dir / "score" / "scores_test_id.csv").exists()
