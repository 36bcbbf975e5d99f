"""
Base Scorer Interface

Defines the abstract interface that all OOD detectors must follow.
"""

from abc import ABC, abstractmethod
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from pipeline.models.logit_models import LogitMatrix
from pipeline.models.rank_models import CanonicalTable
from pipeline.models.scoring_models import RankWeights, ThresholdProfile


class ScoringContext(BaseModel):
    """Fitted artifacts a detector may need besides the logits"""
    canonical_table: Optional[CanonicalTable] = Field(None, description="Canonical rankings")
    profile: Optional[ThresholdProfile] = Field(None, description="Reference threshold profile")
    weights: Optional[RankWeights] = Field(None, description="Rank weights")
    gamma: float = Field(1.5, description="Penalty base")


class BaseScorer(ABC):
    """
    Abstract base class for OOD detectors.

    All detector plugins must inherit from this class and implement the
    required methods. Scores follow one orientation: higher = more ID.
    """

    @abstractmethod
    def get_name(self) -> str:
        """
        Return the detector name used on the command line and in reports.

        Returns:
            str: The detector identifier (e.g., "rankood", "msp")
        """
        pass

    @abstractmethod
    def score(self, logits: LogitMatrix, context: ScoringContext) -> np.ndarray:
        """
        Score every row of a logit matrix.

        Args:
            logits: Logits to score
            context: Fitted artifacts (canonical table, profile, weights)

        Returns:
            Vector of N scores, higher = more in-distribution

        Raises:
            DependencyError: If a required artifact is missing from the context
        """
        pass
