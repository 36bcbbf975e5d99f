"""
Pydantic models for threshold profiles, penalties and rank weights
"""
import math
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, model_validator

from pipeline.core.errors import InputValidationError


class ThresholdProfile(BaseModel):
    """Per-class, per-rank reference logits"""
    per_class: Dict[int, List[float]] = Field(..., description="Class -> Ref vector over ranks 0..K")
    percentile: float = Field(0.95, description="Percentile used for Ref", gt=0.0, lt=1.0)
    n_min_correct: int = Field(..., description="Qualifying samples match the canonical ranking at >= N positions", ge=1)
    support: Dict[int, int] = Field(default_factory=dict, description="Qualifying samples per class")

    @model_validator(mode="after")
    def _check_invariants(self):
        lengths = {len(v) for v in self.per_class.values()}
        if len(lengths) > 1:
            raise InputValidationError(f"Ref vectors differ in length: {sorted(lengths)}")
        for cls, ref in self.per_class.items():
            if not all(math.isfinite(x) for x in ref):
                raise InputValidationError(f"Ref vector for class {cls} is not finite")
            if self.support and self.support.get(cls, 0) < 1:
                raise InputValidationError(f"class {cls} has no qualifying sample")
        return self

    @property
    def n_ranks(self) -> int:
        return len(next(iter(self.per_class.values()))) if self.per_class else 0


class PenaltyConfig(BaseModel):
    """Cumulative margin penalty configuration"""
    gamma: float = Field(1.5, description="Penalty base, >= 1")

    @model_validator(mode="after")
    def _check_gamma(self):
        if not self.gamma >= 1.0:
            raise InputValidationError(f"gamma must be >= 1, got {self.gamma}")
        return self


class FitReport(BaseModel):
    """Residual statistics of the weight regression"""
    r_squared: float = Field(..., description="Coefficient of determination")
    residual_norm: float = Field(..., description="L2 norm of the residuals", ge=0.0)
    intercept: float = Field(..., description="Fitted intercept (discarded from scoring)")
    ridge_applied: bool = Field(False, description="Ridge fallback used for a rank-deficient design")
    ridge_lambda: float = Field(0.0, description="Ridge strength when applied", ge=0.0)
    n_id: int = Field(..., description="ID rows", ge=0)
    n_ood: int = Field(..., description="OOD rows", ge=0)


class RankWeights(BaseModel):
    """Per-rank weights of the RankOOD score"""
    w: List[float] = Field(..., description="One weight per rank 0..K")
    fit_report: Optional[FitReport] = Field(None, description="Regression diagnostics, absent for default weights")

    @model_validator(mode="after")
    def _check_finite(self):
        if not self.w:
            raise InputValidationError("rank weights cannot be empty")
        if not all(math.isfinite(x) for x in self.w):
            raise InputValidationError("rank weights must be finite")
        return self

    @property
    def n_ranks(self) -> int:
        return len(self.w)
