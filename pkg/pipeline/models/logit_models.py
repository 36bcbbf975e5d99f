"""
Pydantic models for logit matrices and dataset manifests
"""
from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from pipeline.core.errors import InputValidationError


class SplitTag(str, Enum):
    """Dataset split a matrix belongs to"""
    TRAIN = "train"
    VAL_ID = "val_id"
    VAL_OOD = "val_ood"
    TEST_ID = "test_id"
    TEST_OOD = "test_ood"
    TEST_OOD_FAR = "test_ood_far"


class LogitMatrix(BaseModel):
    """
    N x C matrix of raw classifier outputs with optional labels.

    The payload is held as float32 (the storage type of the binary
    container) and frozen after validation; numeric code upcasts to
    float64 before accumulating.
    """
    data: np.ndarray = Field(..., description="N x C logits, float32, row-major")
    labels: Optional[np.ndarray] = Field(
        None, description="Optional int64 labels of length N, values in [0, C)"
    )
    split_tag: SplitTag = Field(SplitTag.TRAIN, description="Split this matrix belongs to")

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("data", mode="before")
    @classmethod
    def _coerce_data(cls, v):
        with np.errstate(over="ignore"):
            arr = np.array(v, dtype=np.float32, copy=True)
        if arr.ndim != 2:
            raise InputValidationError(
                f"logit data must be 2-dimensional, got shape {arr.shape}"
            )
        return arr

    @field_validator("labels", mode="before")
    @classmethod
    def _coerce_labels(cls, v):
        if v is None:
            return None
        raw = np.asarray(v)
        if raw.size and not np.all(np.equal(np.mod(raw, 1), 0)):
            raise InputValidationError("labels must be integers")
        arr = np.array(raw, dtype=np.int64, copy=True)
        if arr.ndim != 1:
            raise InputValidationError(
                f"labels must be 1-dimensional, got shape {arr.shape}"
            )
        return arr

    @model_validator(mode="after")
    def _check_invariants(self):
        n, c = self.data.shape
        if n < 1:
            raise InputValidationError("logit matrix must have at least one row (N >= 1)")
        if c < 2:
            raise InputValidationError(f"logit matrix needs C >= 2 columns, got {c}")

        bad = np.argwhere(~np.isfinite(self.data))
        if bad.size:
            row, col = (int(x) for x in bad[0])
            raise InputValidationError(
                f"non-finite logit {self.data[row, col]} at row {row}, column {col}"
            )

        if self.labels is not None:
            if self.labels.shape[0] != n:
                raise InputValidationError(
                    f"labels length {self.labels.shape[0]} does not match N={n}"
                )
            out = np.flatnonzero((self.labels < 0) | (self.labels >= c))
            if out.size:
                row = int(out[0])
                raise InputValidationError(
                    f"label {int(self.labels[row])} at row {row} is outside [0, {c})"
                )
            self.labels.flags.writeable = False

        self.data.flags.writeable = False
        return self

    @property
    def n_samples(self) -> int:
        return int(self.data.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.data.shape[1])

    @property
    def has_labels(self) -> bool:
        return self.labels is not None

    def as_float64(self) -> np.ndarray:
        """Return a float64 copy of the payload for accumulation."""
        return self.data.astype(np.float64)

    def require_labels(self) -> np.ndarray:
        """Return labels or fail when the matrix carries none."""
        if self.labels is None:
            raise InputValidationError(
                f"{self.split_tag.value} logits carry no labels"
            )
        return self.labels

    def with_split(self, split_tag: SplitTag) -> "LogitMatrix":
        """Return the same payload under another split tag."""
        return LogitMatrix(data=self.data, labels=self.labels, split_tag=split_tag)


class ManifestEntry(BaseModel):
    """Single file referenced by a dataset manifest"""
    path: str = Field(..., description="File path, relative to the manifest directory")
    split_tag: SplitTag = Field(..., description="Split stored in the file")
    n_samples: int = Field(..., description="Number of rows", ge=1)
    n_classes: int = Field(..., description="Number of classes of the pipeline", ge=2)
    n_columns: int = Field(..., description="Number of stored columns (C for logits, d for features)", ge=1)
    checksum: str = Field(..., description="CRC-32 of the file bytes, 8 lowercase hex digits")


class DatasetManifest(BaseModel):
    """Manifest describing the files of one dataset"""
    entries: List[ManifestEntry] = Field(default_factory=list, description="Files in the dataset")
    seed: int = Field(..., description="Seed the dataset was generated with")
    notes: str = Field("", description="Free text")

    @model_validator(mode="after")
    def _single_class_count(self):
        counts = sorted({e.n_classes for e in self.entries})
        if len(counts) > 1:
            raise InputValidationError(
                f"manifest entries disagree on the number of classes: {counts}"
            )
        return self

    def entry_for(self, path: str) -> Optional[ManifestEntry]:
        """Find the entry registered for a path"""
        for entry in self.entries:
            if entry.path == path:
                return entry
        return None
