"""
Evaluation reports - ScoreReport construction and JSON / CSV emission
"""
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from ood_metrics.metrics_eval import auroc, fpr_at_tpr
from pipeline.core.logging import ArtifactLogger
from pipeline.models.report_models import CPMatrix, DetectorSummary, RankLogitSummary, ScoreReport
from utilities.tensor_io import CSV_FLOAT_FORMAT

artifact_logger = ArtifactLogger()

PathLike = Union[str, Path]


def evaluate_detector(
    detector_name: str,
    id_scores,
    ood_scores,
    tpr: float = 0.95,
    ood_group: str = "ood",
) -> ScoreReport:
    """Score vectors plus the AUROC / FPR metrics computed from exactly those vectors."""
    fpr, threshold = fpr_at_tpr(id_scores, ood_scores, tpr)
    return ScoreReport(
        detector_name=detector_name,
        ood_group=ood_group,
        id_scores=np.asarray(id_scores, dtype=np.float64).tolist(),
        ood_scores=np.asarray(ood_scores, dtype=np.float64).tolist(),
        auroc=auroc(id_scores, ood_scores),
        fpr95=fpr,
        threshold_at_tpr95=threshold,
        tpr=tpr,
    )


def _write_frame(frame: pd.DataFrame, path: PathLike, kind: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    try:
        frame.to_csv(target, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        artifact_logger.log_error("write", str(target), str(e))
        raise
    artifact_logger.log_operation("write", str(target), format=kind, rows=len(frame))


def write_report_json(
    reports: List[ScoreReport],
    path: PathLike,
    config_echo: Optional[Dict[str, Any]] = None,
    extra: Optional[Dict[str, Any]] = None,
) -> None:
    """Full JSON report: one document per detector and OOD group."""
    document: Dict[str, Any] = {"reports": [r.to_document(config_echo) for r in reports]}
    if extra:
        document.update(extra)
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    artifact_logger.log_operation("write", str(target), format="report_json", reports=len(reports))


def reports_frame(reports: List[ScoreReport]) -> pd.DataFrame:
    return pd.DataFrame([
        {
            "detector": r.detector_name,
            "ood_group": r.ood_group,
            "n_id": len(r.id_scores),
            "n_ood": len(r.ood_scores),
            "auroc": r.auroc,
            "fpr95": r.fpr95,
            "threshold": r.threshold_at_tpr95,
        }
        for r in reports
    ])


def write_metrics_csv(reports: List[ScoreReport], path: PathLike) -> None:
    _write_frame(reports_frame(reports), path, "metrics_csv")


def write_scores_csv(scores: Dict[str, np.ndarray], path: PathLike) -> None:
    """Per-sample scores: one column per detector, rows in sample order."""
    _write_frame(pd.DataFrame({name: np.asarray(v) for name, v in scores.items()}), path, "scores_csv")


def read_scores_csv(path: PathLike) -> Dict[str, np.ndarray]:
    frame = pd.read_csv(path, float_precision="round_trip")
    artifact_logger.log_operation("read", str(path), format="scores_csv", rows=len(frame))
    return {str(c): frame[c].to_numpy(dtype=np.float64) for c in frame.columns}


def cp_frame(cp: CPMatrix) -> pd.DataFrame:
    rows = []
    for cls in sorted(cp.per_class):
        for i, value in enumerate(cp.per_class[cls]):
            rows.append({
                "predicted_class": cls,
                "rank": i + 1,
                "cp": value,
                "numerator": cp.numerators[cls][i],
                "denominator": cp.denominators[cls][i],
            })
    return pd.DataFrame(rows)


def write_cp_csv(cp: CPMatrix, path: PathLike) -> None:
    """Long CP table; undefined entries are empty cells."""
    _write_frame(cp_frame(cp), path, "cp_csv")


def write_rank_logit_summary_csv(summaries: List[RankLogitSummary], path: PathLike) -> None:
    """One row per (position, bin)."""
    rows = []
    for s in summaries:
        for b, count in enumerate(s.histogram):
            rows.append({
                "position": s.position,
                "mean": s.mean,
                "std": s.std,
                "bin": b,
                "bin_left": s.bin_edges[b],
                "bin_right": s.bin_edges[b + 1],
                "count": count,
            })
    _write_frame(pd.DataFrame(rows), path, "rank_logit_summary_csv")


def summarize_seeds(reports_by_seed: Dict[int, List[ScoreReport]]) -> List[DetectorSummary]:
    """Mean and population std of AUROC / FPR95 per detector and OOD group."""
    frame = pd.concat(
        [reports_frame(reports).assign(seed=seed) for seed, reports in sorted(reports_by_seed.items())],
        ignore_index=True,
    )
    summaries = []
    for (detector, group), block in frame.groupby(["detector", "ood_group"], sort=True):
        summaries.append(DetectorSummary(
            detector=detector,
            ood_group=group,
            seeds=[int(s) for s in block["seed"]],
            auroc_mean=float(block["auroc"].mean()),
            auroc_std=float(block["auroc"].std(ddof=0)),
            fpr95_mean=float(block["fpr95"].mean()),
            fpr95_std=float(block["fpr95"].std(ddof=0)),
        ))
    return summaries


def write_summary_csv(summaries: List[DetectorSummary], path: PathLike) -> None:
    _write_frame(pd.DataFrame([s.model_dump() for s in summaries]).drop(columns="seeds"), path, "summary_csv")
