"""
RankOOD detector plugin
"""
import numpy as np

from ood_scorers.base_scorer import BaseScorer, ScoringContext
from ood_scorers.ood_scoring import rankood_scores, uniform_weights
from pipeline.core.errors import DependencyError
from pipeline.models.logit_models import LogitMatrix


class RankOODScorer(BaseScorer):
    """Penalised deviation from the class's reference threshold profile"""

    def get_name(self) -> str:
        return "rankood"

    def score(self, logits: LogitMatrix, context: ScoringContext) -> np.ndarray:
        if context.canonical_table is None:
            raise DependencyError("rankood needs a canonical table", producer="canon")
        if context.profile is None:
            raise DependencyError("rankood needs a threshold profile", producer="profile")
        weights = context.weights or uniform_weights(context.canonical_table.K)
        return rankood_scores(
            logits, context.canonical_table, context.profile, weights, context.gamma
        )
