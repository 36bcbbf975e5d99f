"""
OOD Metrics - Detection metrics, rank diagnostics and reports
"""
from ood_metrics.metrics_eval import (
    auroc,
    fpr_at_tpr,
    id_accuracy,
    cp_matrix,
    cp_mean,
    rank_logit_summary,
)
from ood_metrics.reports import (
    evaluate_detector,
    summarize_seeds,
    write_report_json,
    write_metrics_csv,
)

__all__ = [
    "auroc",
    "fpr_at_tpr",
    "id_accuracy",
    "cp_matrix",
    "cp_mean",
    "rank_logit_summary",
    "evaluate_detector",
    "summarize_seeds",
    "write_report_json",
    "write_metrics_csv",
]

__version__ = "1.0.0"
