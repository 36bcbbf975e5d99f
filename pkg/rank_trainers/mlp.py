"""
Feed-forward ReLU classifier in numpy

Weights are stored fan_in x fan_out so a layer is ``h @ W + b``.
Parameters persist as one float64 container per weight and bias plus an
``architecture.json`` descriptor.
"""
import json
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from pipeline.core.errors import DependencyError, FormatError
from pipeline.core.logging import ArtifactLogger
from pipeline.models.logit_models import LogitMatrix, SplitTag
from pipeline.models.train_models import FeatureSet, MLPArchitecture, ModelParams
from utilities.tensor_io import read_matrix, write_matrix

artifact_logger = ArtifactLogger()

ARCHITECTURE_FILE = "architecture.json"


def init_params(architecture: MLPArchitecture, seed: int) -> ModelParams:
    """Uniform fan-in initialisation, U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    sizes = architecture.layer_sizes
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return ModelParams(architecture=architecture, weights=weights, biases=biases)


def forward(params: ModelParams, features: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
    """
    Forward pass.

    Returns:
        (logits, activations) where activations[l] is the input of layer l
    """
    h = np.asarray(features, dtype=np.float64)
    activations = [h]
    last = len(params.weights) - 1
    for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = h @ w + b
        if layer < last:
            h = np.maximum(h, 0.0)
            activations.append(h)
    return h, activations


def backward(
    params: ModelParams, activations: List[np.ndarray], grad_logits: np.ndarray
) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """Gradients of every weight and bias given dLoss/dlogits."""
    n_layers = len(params.weights)
    grad_w: List[Optional[np.ndarray]] = [None] * n_layers
    grad_b: List[Optional[np.ndarray]] = [None] * n_layers
    delta = grad_logits
    for layer in range(n_layers - 1, -1, -1):
        grad_w[layer] = activations[layer].T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ params.weights[layer].T) * (activations[layer] > 0.0)
    return grad_w, grad_b


def predict_logits(
    params: ModelParams,
    features: Union[FeatureSet, np.ndarray],
    split_tag: Optional[SplitTag] = None,
) -> LogitMatrix:
    """Logits of a feature set, carrying over its labels and split."""
    if isinstance(features, FeatureSet):
        raw, labels, tag = features.features, features.labels, features.split_tag
    else:
        raw, labels, tag = features, None, SplitTag.TRAIN
    logits, _ = forward(params, raw)
    return LogitMatrix(data=logits, labels=labels, split_tag=split_tag or tag)


def accuracy(params: ModelParams, features: FeatureSet) -> float:
    """Fraction of samples whose argmax logit equals the label."""
    logits, _ = forward(params, features.features)
    return float(np.mean(np.argmax(logits, axis=1) == features.require_labels()))


def save_model(params: ModelParams, directory: Union[str, Path]) -> Dict[str, str]:
    """
    Persist parameters.

    Returns:
        Mapping of written file name to checksum
    """
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    checksums = {}
    for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
        checksums[f"layer{layer}_weight.bin"] = write_matrix(w, root / f"layer{layer}_weight.bin")
        checksums[f"layer{layer}_bias.bin"] = write_matrix(b[None, :], root / f"layer{layer}_bias.bin")
    (root / ARCHITECTURE_FILE).write_text(params.architecture.model_dump_json(indent=2) + "\n", encoding="utf-8")
    artifact_logger.log_operation("write", str(root), format="model", layers=len(params.weights))
    return checksums


def load_model(directory: Union[str, Path]) -> ModelParams:
    root = Path(directory)
    descriptor = root / ARCHITECTURE_FILE
    if not descriptor.exists():
        raise DependencyError(f"no model found in {root}")
    try:
        architecture = MLPArchitecture.model_validate(json.loads(descriptor.read_text(encoding="utf-8")))
    except json.JSONDecodeError as e:
        raise FormatError(f"{descriptor}: invalid architecture JSON: {e}")

    weights, biases = [], []
    for layer in range(len(architecture.layer_sizes) - 1):
        weights.append(read_matrix(root / f"layer{layer}_weight.bin"))
        biases.append(read_matrix(root / f"layer{layer}_bias.bin")[0])
    params = ModelParams(architecture=architecture, weights=weights, biases=biases)
    artifact_logger.log_operation("read", str(root), format="model", layers=len(weights))
    return params
