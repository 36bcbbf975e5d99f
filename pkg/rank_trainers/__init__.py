"""
Rank Trainers - Synthetic data and desk-scale classifier training

This package contains the synthetic ID / OOD generator, the numpy MLP
and the SGD trainer that runs the two-stage CE -> hybrid-loss pipeline.
"""
from rank_trainers.synthetic import (
    SyntheticDatasets,
    generate_synthetic,
)
from rank_trainers.toy_trainer import (
    train,
    train_ce,
    two_stage_pipeline,
)

__all__ = [
    "SyntheticDatasets",
    "generate_synthetic",
    "train",
    "train_ce",
    "two_stage_pipeline",
]

__version__ = "1.0.0"
