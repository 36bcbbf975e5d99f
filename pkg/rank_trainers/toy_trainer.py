"""
Toy trainer - minibatch SGD with momentum on the hybrid CE + ListMLE loss

Update rule (heavy-ball momentum):
    v = momentum * v + grad
    p = p - lr * v

The learning rate is set once per epoch; the cosine schedule is
lr_t = lr_0 * (1 + cos(pi * t / T)) / 2 with t the 0-based epoch.
Batch gradients are the mean over the batch.
"""
import math
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from config import config as app_config
from pipeline.core.errors import TrainingDivergenceError
from pipeline.core.logging import ComputeLogger
from pipeline.models.logit_models import LogitMatrix
from pipeline.models.rank_models import CanonicalTable, RankProbabilityMatrix
from pipeline.models.train_models import (
    EpochLoss,
    FeatureSet,
    LossHistory,
    MLPArchitecture,
    ModelParams,
    Schedule,
    SyntheticSpec,
    TrainConfig,
)
from rank_core.canonical_ranks import solve_table
from rank_core.pl_objective import cross_entropy_batch, hybrid_loss_batch, subset_positions, target_matrix
from rank_core.rank_stats import compute_rpm_table
from rank_trainers.mlp import accuracy, backward, forward, init_params, predict_logits
from rank_trainers.synthetic import SyntheticDatasets, generate_synthetic

compute_logger = ComputeLogger("rank_trainers.toy_trainer")

StepHook = Callable[[int, ModelParams], None]
# (logits, batch indices) -> (ce losses, listmle losses, per-sample logit gradients)
BatchObjective = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray, np.ndarray]]


def learning_rate(config: TrainConfig, epoch_index: int) -> float:
    """Learning rate used during the 0-based epoch ``epoch_index``."""
    if config.schedule == Schedule.CONSTANT:
        return config.learning_rate
    return config.learning_rate * 0.5 * (1.0 + math.cos(math.pi * epoch_index / config.epochs))


def sgd_momentum_step(
    params: List[np.ndarray],
    grads: List[np.ndarray],
    velocities: List[np.ndarray],
    lr: float,
    momentum: float,
) -> None:
    """In-place heavy-ball update of every parameter array."""
    for p, g, v in zip(params, grads, velocities):
        v *= momentum
        v += g
        p -= lr * v


def _run_sgd(
    model: ModelParams,
    data: FeatureSet,
    config: TrainConfig,
    objective: BatchObjective,
    on_step: Optional[StepHook],
) -> Tuple[ModelParams, LossHistory]:
    params = model.copy()
    arrays = [*params.weights, *params.biases]
    velocities = [np.zeros_like(a) for a in arrays]
    n_layers = len(params.weights)
    rng = np.random.default_rng(config.seed)
    n = data.n_samples
    history = LossHistory()
    step = 0

    for epoch_index in range(config.epochs):
        epoch = epoch_index + 1
        lr = learning_rate(config, epoch_index)
        order = rng.permutation(n)
        ce_sum = lm_sum = 0.0
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            for start in range(0, n, config.batch_size):
                idx = order[start:start + config.batch_size]
                logits, activations = forward(params, data.features[idx])
                ce, lm, grad_logits = objective(logits, idx)
                batch_total = float(np.mean(ce) + config.alpha * np.mean(lm))
                if not math.isfinite(batch_total) or not np.all(np.isfinite(grad_logits)):
                    compute_logger.log_error("toy_trainer", "train", "non-finite loss", epoch=epoch, step=step)
                    raise TrainingDivergenceError(epoch, f"loss {batch_total} at step {step}")
                grad_w, grad_b = backward(params, activations, grad_logits / len(idx))
                sgd_momentum_step(arrays, [*grad_w, *grad_b], velocities, lr, config.momentum)
                ce_sum += float(ce.sum())
                lm_sum += float(lm.sum())
                step += 1
                if on_step is not None:
                    on_step(step, params)

        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise TrainingDivergenceError(epoch, "parameters became non-finite")
        ce_mean, lm_mean = ce_sum / n, lm_sum / n
        record = EpochLoss(
            epoch=epoch,
            total=ce_mean + config.alpha * lm_mean,
            ce=ce_mean,
            listmle=lm_mean,
            learning_rate=lr,
        )
        history.epochs.append(record)
        compute_logger.log_debug("toy_trainer", "epoch", **record.model_dump())

    params.weights, params.biases = arrays[:n_layers], arrays[n_layers:]
    return params, history


def train_ce(
    model: ModelParams,
    data: FeatureSet,
    config: TrainConfig,
    on_step: Optional[StepHook] = None,
) -> Tuple[ModelParams, LossHistory]:
    """Pure cross-entropy training; the ListMLE column of the history stays 0."""
    labels = data.require_labels()

    def objective(logits, idx):
        ce, grad = cross_entropy_batch(logits, labels[idx])
        return ce, np.zeros_like(ce), grad

    params, history = _run_sgd(model, data, config.model_copy(update={"alpha": 0.0}), objective, on_step)
    compute_logger.log_operation(
        "toy_trainer", "train_ce", epochs=config.epochs, final_loss=history.last().total
    )
    return params, history


def train(
    model: ModelParams,
    data: FeatureSet,
    targets: CanonicalTable,
    config: TrainConfig,
    on_step: Optional[StepHook] = None,
) -> Tuple[ModelParams, LossHistory]:
    """
    Hybrid-loss training against frozen canonical rankings.

    Args:
        model: Initial parameters (not modified)
        data: Labelled training features
        targets: Canonical table covering every class
        config: Optimiser, schedule, alpha and rank subset
        on_step: Optional hook called with (step, params) after every update

    Returns:
        (trained parameters, per-epoch loss history)

    Raises:
        TrainingDivergenceError: the loss became non-finite
    """
    labels = data.require_labels()
    count = config.subset_count if config.subset_count is not None else targets.K + 1
    positions = subset_positions(targets.K, config.subset_mode, count)
    classes = target_matrix(targets, labels, positions)

    def objective(logits, idx):
        return hybrid_loss_batch(logits, labels[idx], classes[idx], config.alpha)

    params, history = _run_sgd(model, data, config, objective, on_step)
    compute_logger.log_operation(
        "toy_trainer", "train",
        epochs=config.epochs, alpha=config.alpha, subset=config.subset_mode.value,
        positions=len(positions), final_loss=history.last().total,
    )
    return params, history


class TwoStageResult(BaseModel):
    """Every intermediate product of the two-stage pipeline"""
    datasets: SyntheticDatasets = Field(..., description="Synthetic splits")
    ce_model: ModelParams = Field(..., description="Stage-1 cross-entropy model")
    ce_history: LossHistory = Field(..., description="Stage-1 loss curve")
    train_logits: LogitMatrix = Field(..., description="Stage-1 logits on the training split")
    rpm_table: Dict[int, RankProbabilityMatrix] = Field(..., description="Stage-2 RPMs")
    canonical_table: CanonicalTable = Field(..., description="Stage-2 canonical rankings")
    rank_model: ModelParams = Field(..., description="Stage-3 hybrid-loss model")
    rank_history: LossHistory = Field(..., description="Stage-3 loss curve")
    ce_accuracy: float = Field(..., description="Stage-1 accuracy on test_id")
    rank_accuracy: float = Field(..., description="Stage-3 accuracy on test_id")

    model_config = ConfigDict(arbitrary_types_allowed=True)


def two_stage_pipeline(
    spec: SyntheticSpec,
    config: TrainConfig,
    ce_config: Optional[TrainConfig] = None,
    hidden_sizes: Optional[List[int]] = None,
    K: Optional[int] = None,
) -> TwoStageResult:
    """
    CE pre-training, canonical rankings, then hybrid-loss training.

    Raises:
        PipelineError: some class is never predicted correctly by the CE model
    """
    datasets = generate_synthetic(spec)
    architecture = MLPArchitecture(
        input_dim=spec.feature_dim,
        hidden_sizes=hidden_sizes if hidden_sizes is not None else [64],
        n_classes=spec.n_classes,
    )
    ce_config = ce_config or config.model_copy(update={"alpha": 0.0})

    ce_model, ce_history = train_ce(init_params(architecture, ce_config.seed), datasets.train, ce_config)
    train_logits = predict_logits(ce_model, datasets.train)
    rpm_table = compute_rpm_table(train_logits, K=K, max_workers=app_config.num_workers)
    canonical = solve_table(rpm_table)

    start = ce_model if config.warm_start else init_params(architecture, config.seed)
    rank_model, rank_history = train(start, datasets.train, canonical, config)

    result = TwoStageResult(
        datasets=datasets,
        ce_model=ce_model,
        ce_history=ce_history,
        train_logits=train_logits,
        rpm_table=rpm_table,
        canonical_table=canonical,
        rank_model=rank_model,
        rank_history=rank_history,
        ce_accuracy=accuracy(ce_model, datasets.test_id),
        rank_accuracy=accuracy(rank_model, datasets.test_id),
    )
    compute_logger.log_operation(
        "toy_trainer", "two_stage_pipeline",
        seed=spec.seed, ce_accuracy=result.ce_accuracy, rank_accuracy=result.rank_accuracy,
    )
    return result
