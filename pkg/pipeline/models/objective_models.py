"""
Pydantic models for ranking targets and loss values
"""
from enum import Enum
from typing import List

from pydantic import BaseModel, Field, model_validator

from pipeline.core.errors import InputValidationError


class SubsetMode(str, Enum):
    """Which canonical rank positions a target keeps"""
    FULL = "full"
    TOP = "top"
    BOTTOM = "bottom"
    TOP_BOTTOM = "top_bottom"


class RankTarget(BaseModel):
    """Sub-list of a canonical ranking used as a ListMLE target"""
    positions: List[int] = Field(..., description="Selected rank positions, strictly increasing, starting at 0")
    classes: List[int] = Field(..., description="Canonical class at each selected position")
    subset_mode: SubsetMode = Field(SubsetMode.FULL, description="How the positions were selected")
    count: int = Field(..., description="Number of selected positions N", ge=1)

    @model_validator(mode="after")
    def _check_invariants(self):
        if len(self.positions) != len(self.classes):
            raise InputValidationError("positions and classes must have equal length")
        if not self.positions or self.positions[0] != 0:
            raise InputValidationError("rank position 0 must always be selected")
        if any(b <= a for a, b in zip(self.positions, self.positions[1:])):
            raise InputValidationError(f"positions must be strictly increasing: {self.positions}")
        if len(set(self.classes)) != len(self.classes):
            raise InputValidationError(f"target classes must be distinct: {self.classes}")
        if any(c < 0 for c in self.classes):
            raise InputValidationError("target classes must be non-negative")
        return self

    @property
    def true_class(self) -> int:
        return self.classes[0]


class LossValue(BaseModel):
    """Hybrid loss split into its parts"""
    total: float = Field(..., description="ce_part + alpha * listmle_part")
    ce_part: float = Field(..., description="Cross-entropy term")
    listmle_part: float = Field(..., description="ListMLE term")
    alpha: float = Field(..., description="ListMLE weight", ge=0.0)

    @model_validator(mode="after")
    def _check_total(self):
        expected = self.ce_part + self.alpha * self.listmle_part
        if abs(self.total - expected) > 1e-12 * max(1.0, abs(expected)):
            raise InputValidationError(
                f"total {self.total!r} != ce + alpha * listmle = {expected!r}"
            )
        return self
