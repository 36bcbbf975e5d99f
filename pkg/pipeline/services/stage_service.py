"""
Pipeline stage service layer
One method per CLI stage; every stage reads its inputs from the run
directory through the artifact ledger and records what it writes
"""
import math
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np
import pandas as pd

from ood_metrics.metrics_eval import (
    cp_matrix,
    cp_mean,
    default_summary_positions,
    id_accuracy,
    rank_logit_summary,
)
from ood_metrics.reports import (
    evaluate_detector,
    read_scores_csv,
    summarize_seeds,
    write_cp_csv,
    write_metrics_csv,
    write_rank_logit_summary_csv,
    write_report_json,
    write_scores_csv,
    write_summary_csv,
)
from ood_scorers.base_scorer import ScoringContext
from ood_scorers.ood_scoring import (
    build_profile,
    fit_weights,
    rankood_features,
    read_profile,
    read_weights,
    write_profile,
    write_weights,
)
from ood_scorers.registry import ScorerRegistry
from pipeline.core.errors import DetectorUnavailableError, InputValidationError
from pipeline.core.logging import StageLogger
from pipeline.models.logit_models import LogitMatrix, SplitTag
from pipeline.models.pipeline_models import PipelineConfig
from pipeline.models.rank_models import CanonicalTable
from pipeline.models.report_models import ScoreReport
from pipeline.models.train_models import FeatureSet, LossHistory, MLPArchitecture, ModelParams
from pipeline.services.artifact_service import ArtifactService, get_artifact_service
from rank_core.canonical_ranks import read_canonical_table, solve_table, write_canonical_table
from rank_core.rank_stats import compute_rpm_table, read_rpm_table, write_rpm_table
from rank_trainers.mlp import init_params, load_model, predict_logits, save_model
from rank_trainers.synthetic import MANIFEST_NAME, generate_synthetic, read_split, write_datasets
from rank_trainers.toy_trainer import train, train_ce
from utilities.tensor_io import read_logits, write_logits

stage_logger = StageLogger()

SPLITS = ["train", "val_id", "val_ood", "test_id", "test_ood", "test_ood_far"]
TEST_SPLITS = ["test_id", "test_ood", "test_ood_far"]
OOD_GROUPS = {"near": "test_ood", "far": "test_ood_far"}
REQUIRED_DETECTORS = ("msp", "rankood")

# Producer command of every stage directory
PRODUCERS = {
    "synth": "synth",
    "train_ce": "train-ce",
    "rpm": "rpm",
    "canon": "canon",
    "train_rank": "train-rank",
    "profile": "profile",
    "score": "score",
    "eval": "eval",
}


def _finite_or_none(value: float) -> Optional[float]:
    return value if math.isfinite(value) else None


class StageService:
    """Service running the pipeline stages against one run directory"""

    def __init__(self, pipeline_config: PipelineConfig):
        self.config = pipeline_config
        self.artifacts: ArtifactService = get_artifact_service(pipeline_config.out_dir)
        self.last_reports: List[ScoreReport] = []

    @contextmanager
    def _stage(self, stage: str) -> Iterator[None]:
        started = time.perf_counter()
        stage_logger.log_start(stage, str(self.artifacts.run_dir))
        yield
        stage_logger.log_finish(stage, str(self.artifacts.run_dir), time.perf_counter() - started)

    def _finish(self, stage_dir: str, **extra) -> Dict[str, Any]:
        """Record a stage's outputs and config echo, then summarise it."""
        producer = PRODUCERS[stage_dir]
        self.artifacts.record_tree(stage_dir, producer)
        self.artifacts.write_config_echo(stage_dir, self.config, producer)
        return {
            "stage": producer,
            "out_dir": str(self.artifacts.path(stage_dir)),
            "artifacts": self.artifacts.stage_summary(producer),
            **extra,
        }

    # ------------------------------------------------------------------
    # Loaders
    # ------------------------------------------------------------------

    def _load_split(self, split: str) -> FeatureSet:
        self.artifacts.require(f"synth/{MANIFEST_NAME}", "synth")
        self.artifacts.require(f"synth/{split}.bin", "synth")
        return read_split(self.artifacts.path("synth"), split)

    def _load_canon(self) -> CanonicalTable:
        return read_canonical_table(self.artifacts.require("canon/canonical_table.json", "canon"))

    def _load_model(self, stage_dir: str) -> ModelParams:
        producer = PRODUCERS[stage_dir]
        model_dir = f"{stage_dir}/model"
        for path in self.artifacts.load_ledger():
            if path.startswith(model_dir + "/"):
                self.artifacts.require(path, producer)
        self.artifacts.require(f"{model_dir}/architecture.json", producer)
        return load_model(self.artifacts.path(model_dir))

    def _stage_logits(self, stage_dir: str, split: str) -> LogitMatrix:
        path = self.artifacts.require(f"{stage_dir}/logits/{split}.bin", PRODUCERS[stage_dir])
        return read_logits(path, split_tag=SplitTag(split))

    def _write_model_outputs(self, stage_dir: str, model: ModelParams, history: LossHistory) -> None:
        save_model(model, self.artifacts.path(f"{stage_dir}/model"))
        history_path = self.artifacts.path(f"{stage_dir}/loss_history.csv")
        pd.DataFrame([e.model_dump() for e in history.epochs]).to_csv(
            history_path, index=False, float_format="%.17g", lineterminator="\n"
        )
        for split in SPLITS:
            logits = predict_logits(model, self._load_split(split))
            write_logits(logits, self.artifacts.path(f"{stage_dir}/logits/{split}.bin"))

    def _architecture(self, data: FeatureSet) -> MLPArchitecture:
        return MLPArchitecture(
            input_dim=data.feature_dim,
            hidden_sizes=self.config.hidden_sizes,
            n_classes=data.n_classes,
        )

    # ------------------------------------------------------------------
    # Stages
    # ------------------------------------------------------------------

    def synth(self) -> Dict[str, Any]:
        """Draw the synthetic splits and their manifest."""
        with self._stage("synth"):
            datasets = generate_synthetic(self.config.synthetic)
            write_datasets(datasets, self.artifacts.path("synth"))
            return self._finish("synth", sizes={k: v.n_samples for k, v in datasets.splits().items()})

    def train_ce(self) -> Dict[str, Any]:
        """Stage 1: cross-entropy classifier and its logits on every split."""
        with self._stage("train-ce"):
            data = self._load_split("train")
            cfg = self.config.ce_train
            model, history = train_ce(init_params(self._architecture(data), cfg.seed), data, cfg)
            self._write_model_outputs("train_ce", model, history)
            accuracy = id_accuracy(self._raw_logits("train_ce", "test_id"))
            return self._finish("train_ce", final_loss=history.last().total, test_id_accuracy=accuracy)

    def rpm(self, logits_path: Optional[str] = None) -> Dict[str, Any]:
        """Stage 2a: rank probability matrices, from stage-1 logits or an external file."""
        with self._stage("rpm"):
            if logits_path is not None:
                logits = read_logits(logits_path, split_tag=SplitTag.TRAIN)
            else:
                logits = self._stage_logits("train_ce", "train")
            table = compute_rpm_table(logits, K=self.config.rank_k)
            write_rpm_table(table, self.artifacts.path("rpm/rpm_table.csv"))
            return self._finish("rpm", support={c: rpm.support_count for c, rpm in table.items()})

    def canon(self) -> Dict[str, Any]:
        """Stage 2b: canonical rankings from the RPM table."""
        with self._stage("canon"):
            table = read_rpm_table(self.artifacts.require("rpm/rpm_table.csv", "rpm"))
            canonical = solve_table(table)
            write_canonical_table(canonical, self.artifacts.path("canon/canonical_table.json"))
            return self._finish(
                "canon",
                objective={c: r.objective_value for c, r in canonical.rankings.items()},
            )

    def train_rank(self) -> Dict[str, Any]:
        """Stage 3: hybrid-loss classifier trained against the canonical rankings."""
        with self._stage("train-rank"):
            data = self._load_split("train")
            canonical = self._load_canon()
            cfg = self.config.rank_train
            if cfg.warm_start:
                start = self._load_model("train_ce")
            else:
                start = init_params(self._architecture(data), cfg.seed)
            model, history = train(start, data, canonical, cfg)
            self._write_model_outputs("train_rank", model, history)
            accuracy = id_accuracy(self._raw_logits("train_rank", "test_id"))
            return self._finish(
                "train_rank",
                final_loss=history.last().total,
                final_listmle=history.last().listmle,
                test_id_accuracy=accuracy,
            )

    def profile(self) -> Dict[str, Any]:
        """Reference threshold profile, plus rank weights fitted on the validation splits."""
        with self._stage("profile"):
            canonical = self._load_canon()
            gamma = self.config.penalty.gamma
            profile = build_profile(self._stage_logits("train_rank", "train"), canonical, self.config.percentile)
            write_profile(profile, self.artifacts.path("profile/profile.json"))

            if self.config.weights_file:
                weights = read_weights(self.config.weights_file)
            else:
                weights = fit_weights(
                    rankood_features(self._stage_logits("train_rank", "val_id"), canonical, profile, gamma),
                    rankood_features(self._stage_logits("train_rank", "val_ood"), canonical, profile, gamma),
                )
            if weights.n_ranks != canonical.K + 1:
                raise InputValidationError(
                    f"{weights.n_ranks} rank weights for K={canonical.K} (need {canonical.K + 1})"
                )
            write_weights(weights, self.artifacts.path("profile/weights.json"), gamma=gamma)
            return self._finish("profile", n_min_correct=profile.n_min_correct, weights=weights.w)

    def score(self) -> Dict[str, Any]:
        """Score the test splits with every registered detector."""
        with self._stage("score"):
            context = ScoringContext(
                canonical_table=self._load_canon(),
                profile=read_profile(self.artifacts.require("profile/profile.json", "profile")),
                weights=read_weights(self.artifacts.require("profile/weights.json", "profile")),
                gamma=self.config.penalty.gamma,
            )
            ScorerRegistry.require_scorers(REQUIRED_DETECTORS)
            scorers = ScorerRegistry.get_all_scorers()
            means = {}
            for split in TEST_SPLITS:
                logits = self._stage_logits("train_rank", split)
                scores = {name: scorers[name].score(logits, context) for name in sorted(scorers)}
                write_scores_csv(scores, self.artifacts.path(f"score/scores_{split}.csv"))
                means[split] = {name: float(np.mean(v)) for name, v in scores.items()}
            return self._finish("score", mean_scores=means)

    def _evaluate(self) -> Tuple[List[ScoreReport], Dict[str, Any]]:
        id_scores = read_scores_csv(self.artifacts.require("score/scores_test_id.csv", "score"))
        missing = [name for name in REQUIRED_DETECTORS if name not in id_scores]
        if missing:
            raise DetectorUnavailableError(missing, producer="score")
        reports = []
        for group, split in OOD_GROUPS.items():
            ood_scores = read_scores_csv(self.artifacts.require(f"score/scores_{split}.csv", "score"))
            for detector in sorted(id_scores):
                reports.append(evaluate_detector(
                    detector, id_scores[detector], ood_scores[detector], self.config.tpr, group
                ))

        canonical = self._load_canon()
        ce_test_id = self._stage_logits("train_ce", "test_id")
        rank_logits = {split: self._stage_logits("train_rank", split) for split in TEST_SPLITS}
        cp_means = {}
        for name, logits in [("ce_test_id", ce_test_id), *[(f"rank_{s}", l) for s, l in rank_logits.items()]]:
            cp = cp_matrix(logits, canonical)
            write_cp_csv(cp, self.artifacts.path(f"eval/cp_{name}.csv"))
            cp_means[name] = _finite_or_none(cp_mean(cp))

        positions = self.config.summary_positions or default_summary_positions(canonical.K)
        for split in ("test_id", "test_ood"):
            summaries = rank_logit_summary(
                rank_logits[split], canonical, positions, bins=self.config.histogram_bins
            )
            write_rank_logit_summary_csv(summaries, self.artifacts.path(f"eval/rank_logit_summary_{split}.csv"))

        mean_scores: Dict[str, Dict[str, float]] = {
            detector: {"id": float(np.mean(values))} for detector, values in id_scores.items()
        }
        for r in reports:
            mean_scores[r.detector_name][r.ood_group] = float(np.mean(r.ood_scores))

        extra = {
            "id_accuracy": {
                "ce": id_accuracy(ce_test_id),
                "rank": id_accuracy(rank_logits["test_id"]),
            },
            "cp_mean": cp_means,
            "mean_score": mean_scores,
        }
        write_report_json(
            reports, self.artifacts.path("eval/report.json"),
            config_echo=self.config.model_dump(mode="json"), extra=extra,
        )
        write_metrics_csv(reports, self.artifacts.path("eval/metrics.csv"))
        return reports, extra

    def eval(self) -> Dict[str, Any]:
        """AUROC / FPR reports per detector and OOD group, CP matrices and rank-logit summaries."""
        with self._stage("eval"):
            reports, extra = self._evaluate()
            self.last_reports = reports
            metrics = [
                {"detector": r.detector_name, "ood_group": r.ood_group, "auroc": r.auroc, "fpr95": r.fpr95}
                for r in reports
            ]
            return self._finish("eval", metrics=metrics, **extra)

    def _raw_logits(self, stage_dir: str, split: str) -> LogitMatrix:
        return read_logits(self.artifacts.path(f"{stage_dir}/logits/{split}.bin"), split_tag=SplitTag(split))

    # ------------------------------------------------------------------
    # Chained runs
    # ------------------------------------------------------------------

    def run_stages(self) -> Dict[str, Any]:
        """Every stage in order on this run directory; returns the eval summary."""
        self.synth()
        self.train_ce()
        self.rpm()
        self.canon()
        self.train_rank()
        self.profile()
        self.score()
        return self.eval()

    def _seeded(self, seed: int) -> PipelineConfig:
        data = self.config.model_dump(mode="json")
        data["synthetic"]["seed"] = seed
        data["ce_train"]["seed"] = seed
        data["rank_train"]["seed"] = seed
        data["out_dir"] = str(Path(self.config.out_dir) / f"seed_{seed}")
        return PipelineConfig.model_validate(data)

    def run_all(self, seeds: Optional[List[int]] = None) -> Dict[str, Any]:
        """
        Chain every stage, optionally once per seed with a mean / std summary.

        Each seed runs in its own ``seed_<n>`` sub-directory.
        """
        if not seeds:
            return self.run_stages()

        with self._stage("run-all"):
            reports_by_seed: Dict[int, List[ScoreReport]] = {}
            for seed in seeds:
                service = StageService(self._seeded(seed))
                service.run_stages()
                reports_by_seed[seed] = service.last_reports
            summaries = summarize_seeds(reports_by_seed)
            write_summary_csv(summaries, self.artifacts.path("summary.csv"))
            self.artifacts.record("summary.csv", "run-all")
            return {
                "stage": "run-all",
                "out_dir": str(self.artifacts.run_dir),
                "seeds": list(seeds),
                "summary": [s.model_dump() for s in summaries],
            }


_stage_service: Optional[StageService] = None


def get_stage_service(pipeline_config: Optional[PipelineConfig] = None) -> StageService:
    """Get or create the stage service, rebuilding it when the configuration changes"""
    global _stage_service
    if _stage_service is None or (pipeline_config is not None and pipeline_config != _stage_service.config):
        _stage_service = StageService(pipeline_config or PipelineConfig())
    return _stage_service
