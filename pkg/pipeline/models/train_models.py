"""
Pydantic models for synthetic data generation and classifier training
"""
from enum import Enum
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from pipeline.core.errors import InputValidationError
from pipeline.models.logit_models import SplitTag
from pipeline.models.objective_models import SubsetMode


class SyntheticSpec(BaseModel):
    """Description of a synthetic ID / OOD dataset"""
    n_classes: int = Field(8, description="Number of ID classes C")
    feature_dim: int = Field(16, description="Feature dimension d")
    samples_per_class: int = Field(200, description="Training samples per class", ge=1)
    eval_samples_per_class: Optional[int] = Field(
        None, description="Validation/test samples per class (default: half of samples_per_class)", ge=1
    )
    class_similarity: float = Field(0.5, description="Overlap of class means, 0 = orthogonal", ge=0.0, le=1.0)
    ood_shift: float = Field(6.0, description="Displacement of OOD cluster means", ge=0.0)
    class_separation: float = Field(8.0, description="Norm of every ID class mean", gt=0.0)
    cluster_std: float = Field(1.0, description="Isotropic standard deviation of every cluster", gt=0.0)
    n_ood_clusters: int = Field(4, description="Number of OOD cluster means per OOD kind", ge=1)
    seed: int = Field(0, description="Seed of the generator")

    @model_validator(mode="after")
    def _check_invariants(self):
        if self.n_classes < 3:
            raise InputValidationError(
                f"synthetic data needs at least 3 classes, got {self.n_classes}"
            )
        if self.feature_dim < 2:
            raise InputValidationError(
                f"synthetic data needs feature_dim >= 2, got {self.feature_dim}"
            )
        return self

    @property
    def eval_per_class(self) -> int:
        if self.eval_samples_per_class is not None:
            return self.eval_samples_per_class
        return max(1, self.samples_per_class // 2)


class FeatureSet(BaseModel):
    """
    N x d input features with optional labels, float64.

    Shaped like a logit matrix, but labels range over the classes of the
    pipeline rather than over the columns.
    """
    features: np.ndarray = Field(..., description="N x d features")
    labels: Optional[np.ndarray] = Field(None, description="Optional int64 labels in [0, n_classes)")
    n_classes: int = Field(..., description="Number of ID classes", ge=2)
    split_tag: SplitTag = Field(..., description="Split the features belong to")

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("features", mode="before")
    @classmethod
    def _coerce_features(cls, v):
        return np.array(v, dtype=np.float64, copy=True)

    @field_validator("labels", mode="before")
    @classmethod
    def _coerce_labels(cls, v):
        return None if v is None else np.array(v, dtype=np.int64, copy=True)

    @model_validator(mode="after")
    def _check_invariants(self):
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise InputValidationError(f"features must be a non-empty matrix, got shape {self.features.shape}")
        if not np.all(np.isfinite(self.features)):
            raise InputValidationError(f"{self.split_tag.value} features contain non-finite values")
        if self.labels is not None:
            if self.labels.shape != (self.features.shape[0],):
                raise InputValidationError("labels must have one entry per row")
            if np.any((self.labels < 0) | (self.labels >= self.n_classes)):
                raise InputValidationError(f"labels must lie in [0, {self.n_classes})")
        return self

    @property
    def n_samples(self) -> int:
        return int(self.features.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1])

    def require_labels(self) -> np.ndarray:
        if self.labels is None:
            raise InputValidationError(f"{self.split_tag.value} features carry no labels")
        return self.labels


class MLPArchitecture(BaseModel):
    """Architecture descriptor of the feed-forward classifier"""
    input_dim: int = Field(..., description="Input feature dimension d", ge=1)
    hidden_sizes: List[int] = Field(default_factory=lambda: [64], description="Hidden layer widths")
    n_classes: int = Field(..., description="Output classes C", ge=2)
    activation: Literal["relu"] = Field("relu", description="Hidden activation")

    @property
    def layer_sizes(self) -> List[int]:
        return [self.input_dim, *self.hidden_sizes, self.n_classes]


class ModelParams(BaseModel):
    """Weights and biases of an MLP, float64"""
    architecture: MLPArchitecture = Field(..., description="Layer layout")
    weights: List[np.ndarray] = Field(..., description="Per-layer weight matrices, fan_in x fan_out")
    biases: List[np.ndarray] = Field(..., description="Per-layer bias vectors")

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def _check_invariants(self):
        sizes = self.architecture.layer_sizes
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise InputValidationError(
                f"expected {len(sizes) - 1} layers, got {len(self.weights)} weights "
                f"and {len(self.biases)} biases"
            )
        for layer, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[layer], sizes[layer + 1]):
                raise InputValidationError(
                    f"layer {layer} weight shape {w.shape} != {(sizes[layer], sizes[layer + 1])}"
                )
            if b.shape != (sizes[layer + 1],):
                raise InputValidationError(
                    f"layer {layer} bias shape {b.shape} != {(sizes[layer + 1],)}"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise InputValidationError(f"layer {layer} has non-finite parameters")
        return self

    def copy(self) -> "ModelParams":
        """Deep copy of the parameter arrays"""
        return ModelParams(
            architecture=self.architecture,
            weights=[w.astype(np.float64, copy=True) for w in self.weights],
            biases=[b.astype(np.float64, copy=True) for b in self.biases],
        )

    def flat(self) -> np.ndarray:
        """All parameters concatenated, for trajectory comparisons"""
        return np.concatenate(
            [a.ravel() for pair in zip(self.weights, self.biases) for a in pair]
        )


class Schedule(str, Enum):
    """Learning-rate schedule"""
    CONSTANT = "constant"
    COSINE = "cosine"


class TrainConfig(BaseModel):
    """Minibatch SGD configuration"""
    epochs: int = Field(40, description="Training epochs", ge=1)
    batch_size: int = Field(64, description="Minibatch size", ge=1)
    learning_rate: float = Field(0.1, description="Initial learning rate", gt=0.0)
    momentum: float = Field(0.9, description="Momentum factor", ge=0.0, lt=1.0)
    schedule: Schedule = Field(Schedule.COSINE, description="Learning-rate schedule")
    alpha: float = Field(1.0, description="ListMLE weight in the hybrid loss", ge=0.0)
    subset_mode: SubsetMode = Field(SubsetMode.FULL, description="Rank subset used as target")
    subset_count: Optional[int] = Field(None, description="Number of rank positions N (ignored for full)", ge=1)
    warm_start: bool = Field(False, description="Start the rank model from the CE weights")
    seed: int = Field(0, description="Seed for initialisation and shuffling")


class EpochLoss(BaseModel):
    """Per-epoch mean of the loss parts"""
    epoch: int = Field(..., description="1-based epoch", ge=1)
    total: float = Field(..., description="Mean total loss")
    ce: float = Field(..., description="Mean cross-entropy part")
    listmle: float = Field(..., description="Mean ListMLE part")
    learning_rate: float = Field(..., description="Learning rate used in the epoch")


class LossHistory(BaseModel):
    """Loss curve of one training run"""
    epochs: List[EpochLoss] = Field(default_factory=list, description="One entry per epoch")

    def first(self) -> EpochLoss:
        return self.epochs[0]

    def last(self) -> EpochLoss:
        return self.epochs[-1]
