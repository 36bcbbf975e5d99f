"""
Synthetic data - Gaussian ID classes on a similarity lattice plus near/far OOD clusters

Class c sits at a jittered 1-D lattice position t_c. Its mean mixes the
base directions e_k with weights s^|t_c - t_k| (s = class_similarity), so
lattice neighbours overlap more than distant classes and the rank order
below the top class is stable. Near-OOD centres sit between two ID means;
far-OOD centres are pushed along directions orthogonal to the ID means.
"""
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from pipeline.core.errors import DependencyError
from pipeline.core.logging import ComputeLogger
from pipeline.models.logit_models import DatasetManifest, SplitTag
from pipeline.models.train_models import FeatureSet, SyntheticSpec
from utilities.tensor_io import manifest_entry, read_labelled_matrix, read_manifest, write_manifest, write_matrix

compute_logger = ComputeLogger("rank_trainers.synthetic")

LATTICE_JITTER = 0.3
MANIFEST_NAME = "manifest.json"


class SyntheticDatasets(BaseModel):
    """All splits of one synthetic draw"""
    spec: SyntheticSpec = Field(..., description="Spec the data was drawn from")
    means: np.ndarray = Field(..., description="ID class means, C x d")
    train: FeatureSet = Field(..., description="Labelled ID training split")
    val_id: FeatureSet = Field(..., description="Labelled ID validation split")
    val_ood: FeatureSet = Field(..., description="OOD validation split, half near and half far")
    test_id: FeatureSet = Field(..., description="Labelled ID test split")
    test_ood: FeatureSet = Field(..., description="Near-OOD test split")
    test_ood_far: FeatureSet = Field(..., description="Far-OOD test split")

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    def splits(self) -> Dict[str, FeatureSet]:
        return {
            "train": self.train,
            "val_id": self.val_id,
            "val_ood": self.val_ood,
            "test_id": self.test_id,
            "test_ood": self.test_ood,
            "test_ood_far": self.test_ood_far,
        }


def _class_directions(spec: SyntheticSpec, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Base directions (C x d) and an orthonormal basis of their complement (d x r)."""
    C, d = spec.n_classes, spec.feature_dim
    basis, _ = np.linalg.qr(rng.standard_normal((d, d)))
    if C <= d:
        return basis[:, :C].T.copy(), basis[:, C:].copy()
    directions = rng.standard_normal((C, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return directions, np.zeros((d, 0))


def class_means(spec: SyntheticSpec, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """ID class means (C x d), each of norm ``class_separation``, and the complement basis."""
    directions, complement = _class_directions(spec, rng)
    positions = np.arange(spec.n_classes) + rng.uniform(-LATTICE_JITTER, LATTICE_JITTER, spec.n_classes)
    distance = np.abs(positions[:, None] - positions[None, :])
    mixing = np.power(spec.class_similarity, distance)
    means = mixing @ directions
    means *= spec.class_separation / np.linalg.norm(means, axis=1, keepdims=True)
    return means, complement


def _orthogonal_directions(
    complement: np.ndarray, count: int, feature_dim: int, rng: np.random.Generator
) -> np.ndarray:
    """Unit vectors inside the complement of the ID means (random ones when there is none)."""
    if complement.shape[1] == 0:
        compute_logger.log_warning(
            "synthetic", "generate_synthetic",
            "feature_dim leaves no room orthogonal to the class means, using random directions",
        )
        raw = rng.standard_normal((count, feature_dim))
    else:
        raw = rng.standard_normal((count, complement.shape[1])) @ complement.T
    return raw / np.linalg.norm(raw, axis=1, keepdims=True)


def _draw(centres: np.ndarray, counts: List[int], std: float, rng: np.random.Generator) -> np.ndarray:
    blocks = [
        centre + std * rng.standard_normal((n, centres.shape[1]))
        for centre, n in zip(centres, counts)
        if n > 0
    ]
    return np.concatenate(blocks, axis=0)


def _spread(total: int, n_clusters: int) -> List[int]:
    """Split ``total`` samples over clusters as evenly as possible."""
    base, extra = divmod(total, n_clusters)
    return [base + (1 if i < extra else 0) for i in range(n_clusters)]


def _id_split(means, per_class, spec, rng, split_tag) -> FeatureSet:
    counts = [per_class] * spec.n_classes
    return FeatureSet(
        features=_draw(means, counts, spec.cluster_std, rng),
        labels=np.repeat(np.arange(spec.n_classes), per_class),
        n_classes=spec.n_classes,
        split_tag=split_tag,
    )


def generate_synthetic(spec: SyntheticSpec) -> SyntheticDatasets:
    """
    Draw every split of a synthetic dataset.

    Args:
        spec: Dataset description; the seed fixes every draw

    Returns:
        SyntheticDatasets with labelled ID splits and unlabelled OOD splits
    """
    rng = np.random.default_rng(spec.seed)
    C, d = spec.n_classes, spec.feature_dim
    means, complement = class_means(spec, rng)

    pairs = [rng.choice(C, size=2, replace=False) for _ in range(spec.n_ood_clusters)]
    near_offsets = _orthogonal_directions(complement, spec.n_ood_clusters, d, rng)
    near_centres = np.stack([
        0.5 * (means[a] + means[b]) + 0.25 * spec.ood_shift * offset
        for (a, b), offset in zip(pairs, near_offsets)
    ])
    far_centres = spec.ood_shift * _orthogonal_directions(complement, spec.n_ood_clusters, d, rng)

    n_eval = spec.eval_per_class
    n_ood = n_eval * C
    train = _id_split(means, spec.samples_per_class, spec, rng, SplitTag.TRAIN)
    val_id = _id_split(means, n_eval, spec, rng, SplitTag.VAL_ID)
    val_near = _draw(near_centres, _spread(n_ood - n_ood // 2, spec.n_ood_clusters), spec.cluster_std, rng)
    val_far = _draw(far_centres, _spread(n_ood // 2, spec.n_ood_clusters), spec.cluster_std, rng) \
        if n_ood // 2 else np.zeros((0, d))
    test_id = _id_split(means, n_eval, spec, rng, SplitTag.TEST_ID)
    test_near = _draw(near_centres, _spread(n_ood, spec.n_ood_clusters), spec.cluster_std, rng)
    test_far = _draw(far_centres, _spread(n_ood, spec.n_ood_clusters), spec.cluster_std, rng)

    def ood(features, tag):
        return FeatureSet(features=features, labels=None, n_classes=C, split_tag=tag)

    datasets = SyntheticDatasets(
        spec=spec,
        means=means,
        train=train,
        val_id=val_id,
        val_ood=ood(np.concatenate([val_near, val_far], axis=0), SplitTag.VAL_OOD),
        test_id=test_id,
        test_ood=ood(test_near, SplitTag.TEST_OOD),
        test_ood_far=ood(test_far, SplitTag.TEST_OOD_FAR),
    )
    compute_logger.log_operation(
        "synthetic", "generate_synthetic",
        seed=spec.seed, n_classes=C, feature_dim=d,
        sizes={name: fs.n_samples for name, fs in datasets.splits().items()},
    )
    return datasets


def nearest_mean_accuracy(features: FeatureSet, means: np.ndarray) -> float:
    """Accuracy of assigning every sample to its closest class mean."""
    labels = features.require_labels()
    distances = np.linalg.norm(features.features[:, None, :] - means[None, :, :], axis=2)
    return float(np.mean(np.argmin(distances, axis=1) == labels))


def write_datasets(datasets: SyntheticDatasets, directory: Union[str, Path]) -> DatasetManifest:
    """Write every split to ``<split>.bin`` and a checksummed manifest."""
    root = Path(directory)
    entries = []
    for name, fs in datasets.splits().items():
        path = root / f"{name}.bin"
        checksum = write_matrix(fs.features, path, labels=fs.labels)
        entries.append(manifest_entry(
            path, fs.split_tag, fs.n_samples, fs.feature_dim, fs.n_classes, checksum, root=root
        ))
    manifest = DatasetManifest(
        entries=entries,
        seed=datasets.spec.seed,
        notes=f"synthetic {datasets.spec.model_dump_json()}",
    )
    write_manifest(manifest, root / MANIFEST_NAME)
    return manifest


def read_split(directory: Union[str, Path], split: str, verify: bool = True) -> FeatureSet:
    """Load one split through its manifest, checking the checksum."""
    root = Path(directory)
    manifest = read_manifest(root / MANIFEST_NAME, verify=verify)
    entry = manifest.entry_for(f"{split}.bin")
    if entry is None:
        raise DependencyError(f"split {split} is not listed in {root / MANIFEST_NAME}", producer="synth")
    features, labels = read_labelled_matrix(root / entry.path)
    return FeatureSet(
        features=features, labels=labels, n_classes=entry.n_classes, split_tag=entry.split_tag
    )
