"""
Pydantic models for evaluation reports
"""
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class ScoreReport(BaseModel):
    """Detector scores on ID and OOD data with their summary metrics"""
    detector_name: str = Field(..., description="Detector that produced the scores")
    ood_group: str = Field("ood", description="OOD split the report compares against")
    id_scores: List[float] = Field(..., description="Scores of ID samples, higher = more ID")
    ood_scores: List[float] = Field(..., description="Scores of OOD samples")
    auroc: float = Field(..., description="Area under the ROC curve", ge=0.0, le=1.0)
    fpr95: float = Field(..., description="OOD false-positive rate at the TPR threshold", ge=0.0, le=1.0)
    threshold_at_tpr95: float = Field(..., description="Score threshold reaching the target ID TPR")
    tpr: float = Field(0.95, description="Target ID true-positive rate", gt=0.0, le=1.0)

    def to_document(self, config_echo: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """Report in the persisted JSON schema"""
        return {
            "detector": self.detector_name,
            "ood_group": self.ood_group,
            "n_id": len(self.id_scores),
            "n_ood": len(self.ood_scores),
            "auroc": self.auroc,
            "fpr95": self.fpr95,
            "threshold": self.threshold_at_tpr95,
            "tpr": self.tpr,
            "id_scores": self.id_scores,
            "ood_scores": self.ood_scores,
            "config_echo": config_echo or {},
        }


class CPMatrix(BaseModel):
    """
    Conditional probabilities of a correct rank given correct earlier ranks.

    Entry i (0-based index for rank i + 1) is ``numerators[c][i] /
    denominators[c][i]``; it is ``None`` when the denominator is zero.
    """
    per_class: Dict[int, List[Optional[float]]] = Field(..., description="Class -> CP entries for ranks 1..K")
    numerators: Dict[int, List[int]] = Field(..., description="Samples correct at ranks 1..i")
    denominators: Dict[int, List[int]] = Field(..., description="Samples correct at ranks 1..i-1")

    def defined_entries(self) -> List[float]:
        return [v for row in self.per_class.values() for v in row if v is not None]


class RankLogitSummary(BaseModel):
    """Distribution of the rank-i logit over a dataset"""
    position: int = Field(..., description="Rank position i", ge=0)
    mean: float = Field(..., description="Mean rank-i logit")
    std: float = Field(..., description="Population standard deviation", ge=0.0)
    histogram: List[int] = Field(..., description="Counts per bin")
    bin_edges: List[float] = Field(..., description="Shared bin edges, len(histogram) + 1")


class DetectorSummary(BaseModel):
    """Mean and standard deviation of one detector's metrics across seeds"""
    detector: str = Field(..., description="Detector name")
    ood_group: str = Field(..., description="OOD group")
    seeds: List[int] = Field(..., description="Seeds aggregated")
    auroc_mean: float = Field(..., description="Mean AUROC")
    auroc_std: float = Field(..., description="Population std of AUROC")
    fpr95_mean: float = Field(..., description="Mean FPR95")
    fpr95_std: float = Field(..., description="Population std of FPR95")
