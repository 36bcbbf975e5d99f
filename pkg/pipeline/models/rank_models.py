"""
Pydantic models for rank probability matrices and canonical rankings
"""
from typing import Dict, List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from pipeline.core.errors import InputValidationError

COLUMN_SUM_TOLERANCE = 1e-9


class RankProbabilityMatrix(BaseModel):
    """
    Per-class matrix of rank-position PMFs.

    Row r describes candidate class ``candidate_classes[r]``; column j
    describes rank position j + 1 (rank 0 is the predicted class and is
    not stored).
    """
    predicted_class: int = Field(..., description="Class c the matrix is conditioned on", ge=0)
    candidate_classes: List[int] = Field(..., description="All classes except c, ascending")
    counts: np.ndarray = Field(..., description="Integer tallies, candidates x K")
    probs: np.ndarray = Field(..., description="counts / support_count, candidates x K")
    support_count: int = Field(..., description="Correctly classified samples of class c", ge=0)

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("counts", mode="before")
    @classmethod
    def _coerce_counts(cls, v):
        return np.array(v, dtype=np.int64, copy=True)

    @field_validator("probs", mode="before")
    @classmethod
    def _coerce_probs(cls, v):
        return np.array(v, dtype=np.float64, copy=True)

    @model_validator(mode="after")
    def _check_invariants(self):
        if self.predicted_class in self.candidate_classes:
            raise InputValidationError(
                "the predicted class cannot be its own rank candidate"
            )
        if list(self.candidate_classes) != sorted(set(self.candidate_classes)):
            raise InputValidationError("candidate classes must be distinct and ascending")
        if self.probs.ndim != 2 or self.probs.shape[0] != len(self.candidate_classes):
            raise InputValidationError(
                f"probs shape {self.probs.shape} does not match "
                f"{len(self.candidate_classes)} candidates"
            )
        if self.counts.shape != self.probs.shape:
            raise InputValidationError("counts and probs must share one shape")
        if np.any(self.probs < 0.0) or np.any(self.probs > 1.0):
            raise InputValidationError("rank probabilities must lie in [0, 1]")
        if self.support_count > 0:
            drift = np.abs(self.probs.sum(axis=0) - 1.0)
            if drift.size and drift.max() > COLUMN_SUM_TOLERANCE:
                col = int(np.argmax(drift))
                raise InputValidationError(
                    f"rank column {col + 1} sums to {self.probs[:, col].sum()!r}, not 1"
                )
        elif np.any(self.probs != 0.0):
            raise InputValidationError("an empty-support matrix must be all zeros")
        self.counts.flags.writeable = False
        self.probs.flags.writeable = False
        return self

    @property
    def K(self) -> int:
        return int(self.probs.shape[1])

    @property
    def is_empty(self) -> bool:
        return self.support_count == 0

    def prob(self, cls: int, rank: int) -> float:
        """Probability that ``cls`` sits at 1-based ``rank``."""
        return float(self.probs[self.candidate_classes.index(cls), rank - 1])


class CanonicalRanking(BaseModel):
    """Fixed class ranking for one predicted class"""
    predicted_class: int = Field(..., description="Class c", ge=0)
    permutation: List[int] = Field(..., description="Class at each rank 0..K; entry 0 is c")
    objective_value: float = Field(..., description="Sum of the selected rank probabilities")
    support_count: int = Field(..., description="Samples behind the underlying RPM", ge=0)

    @model_validator(mode="after")
    def _check_invariants(self):
        if not self.permutation or self.permutation[0] != self.predicted_class:
            raise InputValidationError(
                "canonical ranking must start with the predicted class"
            )
        if len(set(self.permutation)) != len(self.permutation):
            raise InputValidationError(
                f"canonical ranking repeats a class: {self.permutation}"
            )
        return self

    @property
    def K(self) -> int:
        return len(self.permutation) - 1


class CanonicalTable(BaseModel):
    """Canonical rankings for every class of a pipeline"""
    n_classes: int = Field(..., description="Number of classes C", ge=2)
    K: int = Field(..., description="Ranked positions below rank 0", ge=1)
    rankings: Dict[int, CanonicalRanking] = Field(..., description="Ranking by predicted class")

    @model_validator(mode="after")
    def _check_invariants(self):
        for cls, ranking in self.rankings.items():
            if ranking.predicted_class != cls:
                raise InputValidationError(
                    f"ranking stored under class {cls} is for class {ranking.predicted_class}"
                )
            if ranking.K != self.K:
                raise InputValidationError(
                    f"ranking for class {cls} has K={ranking.K}, table has K={self.K}"
                )
            if any(not 0 <= k < self.n_classes for k in ranking.permutation):
                raise InputValidationError(
                    f"ranking for class {cls} references a class outside [0, {self.n_classes})"
                )
        return self

    @property
    def is_complete(self) -> bool:
        return set(self.rankings) == set(range(self.n_classes))

    def missing_classes(self) -> List[int]:
        return [c for c in range(self.n_classes) if c not in self.rankings]

    def permutation_for(self, cls: int) -> List[int]:
        return self.rankings[cls].permutation

    def permutation_matrix(self) -> np.ndarray:
        """(C, K+1) int array of canonical permutations; requires a complete table."""
        if not self.is_complete:
            raise InputValidationError(
                f"canonical table misses classes {self.missing_classes()}"
            )
        return np.array(
            [self.rankings[c].permutation for c in range(self.n_classes)],
            dtype=np.int64,
        )
