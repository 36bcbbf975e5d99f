"""
Maximum softmax probability baseline
"""
import numpy as np

from ood_scorers.base_scorer import BaseScorer, ScoringContext
from ood_scorers.ood_scoring import msp_scores
from pipeline.models.logit_models import LogitMatrix


class MSPScorer(BaseScorer):
    """Largest softmax probability of the sample"""

    def get_name(self) -> str:
        return "msp"

    def score(self, logits: LogitMatrix, context: ScoringContext) -> np.ndarray:
        return msp_scores(logits)
