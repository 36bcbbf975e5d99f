"""
Pydantic model for the resolved pipeline configuration
"""
import json
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, Field

from config import config
from pipeline.core.errors import FormatError
from pipeline.models.scoring_models import PenaltyConfig
from pipeline.models.train_models import SyntheticSpec, TrainConfig


class PipelineConfig(BaseModel):
    """Every knob of a pipeline run, serialisable as one JSON document"""
    synthetic: SyntheticSpec = Field(default_factory=SyntheticSpec, description="Synthetic dataset")
    ce_train: TrainConfig = Field(
        default_factory=lambda: TrainConfig(alpha=0.0), description="Stage-1 cross-entropy training"
    )
    rank_train: TrainConfig = Field(default_factory=TrainConfig, description="Stage-3 hybrid training")
    hidden_sizes: List[int] = Field(default_factory=lambda: [64], description="MLP hidden widths")
    penalty: PenaltyConfig = Field(
        default_factory=lambda: PenaltyConfig(gamma=config.default_gamma),
        description="Cumulative margin penalty",
    )
    percentile: float = Field(
        default_factory=lambda: config.default_percentile,
        description="Reference-logit percentile", gt=0.0, lt=1.0,
    )
    tpr: float = Field(
        default_factory=lambda: config.default_tpr,
        description="Target ID true-positive rate for FPR", gt=0.0, le=1.0,
    )
    rank_k: Optional[int] = Field(None, description="Rank positions below rank 0 (default C - 1)", ge=1)
    summary_positions: Optional[List[int]] = Field(
        None, description="Rank positions summarised in rank_logit_summary.csv (default 0, K/2, K)"
    )
    histogram_bins: int = Field(20, description="Bins of the rank-logit histograms", ge=1)
    weights_file: Optional[str] = Field(None, description="Pre-fitted rank weights JSON instead of fitting")
    out_dir: str = Field(default_factory=lambda: config.output_root, description="Run directory")

    @classmethod
    def from_file(cls, path: str) -> "PipelineConfig":
        """Load a (possibly partial) config document"""
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise FormatError(f"config file {path} is not valid JSON: {e}")
        return cls.model_validate(payload)

    def resolved_k(self) -> int:
        return self.rank_k if self.rank_k is not None else self.synthetic.n_classes - 1

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)
