"""
Tensor I/O - binary and CSV containers for logit matrices, plain matrices
and dataset manifests.

Binary layout (little-endian)::

    magic     4 bytes  b"RKOD"
    version   uint32   1 = float32 payload, 2 = float64 payload
    N         uint64   rows
    C         uint32   columns
    labels    uint8    1 if a label block follows the payload
    payload   N*C      row-major IEEE-754 values
    labels    N        uint32, only when the flag is set

CSV layout: mandatory header ``l0,...,l{C-1}[,label]``, one row per sample.
"""
import io
import json
import os
import struct
import tempfile
import zlib
from enum import Enum
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd

from pipeline.core.errors import FormatError, InputValidationError, StaleArtifactError
from pipeline.core.logging import ArtifactLogger
from pipeline.models.logit_models import DatasetManifest, LogitMatrix, ManifestEntry, SplitTag

artifact_logger = ArtifactLogger()

MAGIC = b"RKOD"
HEADER = struct.Struct("<4sIQIB")
VERSION_FLOAT32 = 1
VERSION_FLOAT64 = 2
_PAYLOAD_DTYPES = {VERSION_FLOAT32: np.dtype("<f4"), VERSION_FLOAT64: np.dtype("<f8")}
_LABEL_DTYPE = np.dtype("<u4")
LABEL_COLUMN = "label"
CSV_FLOAT_FORMAT = "%.17g"

PathLike = Union[str, Path]


class TensorFormat(str, Enum):
    """On-disk format of a logit matrix"""
    BINARY = "binary"
    CSV = "csv"


def crc32_bytes(raw: bytes) -> str:
    """CRC-32 of a byte string as 8 lowercase hex digits."""
    return f"{zlib.crc32(raw) & 0xFFFFFFFF:08x}"


def crc32_file(path: PathLike) -> str:
    """CRC-32 of a file's bytes."""
    return crc32_bytes(Path(path).read_bytes())


def infer_format(path: PathLike) -> TensorFormat:
    """Pick the format from the file suffix (.csv, anything else binary)."""
    return TensorFormat.CSV if Path(path).suffix.lower() == ".csv" else TensorFormat.BINARY


def _atomic_write(path: PathLike, raw: bytes) -> str:
    """Write bytes through a temp file + rename so readers never see partial files."""
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(raw)
            os.replace(tmp_name, target)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise
    except OSError as e:
        artifact_logger.log_error("write", str(target), str(e))
        raise
    return crc32_bytes(raw)


# ---------------------------------------------------------------------------
# Binary container
# ---------------------------------------------------------------------------

def _encode(values: np.ndarray, version: int, labels: Optional[np.ndarray]) -> bytes:
    n, c = values.shape
    header = HEADER.pack(MAGIC, version, n, c, 1 if labels is not None else 0)
    body = np.ascontiguousarray(values, dtype=_PAYLOAD_DTYPES[version]).tobytes()
    tail = b""
    if labels is not None:
        tail = np.ascontiguousarray(labels, dtype=_LABEL_DTYPE).tobytes()
    return header + body + tail


def _decode(raw: bytes, source: str):
    if len(raw) < HEADER.size:
        raise FormatError(f"{source}: file shorter than the {HEADER.size}-byte header")
    magic, version, n, c, has_labels = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{source}: bad magic {magic!r}, expected {MAGIC!r}")
    if version not in _PAYLOAD_DTYPES:
        raise FormatError(f"{source}: unsupported container version {version}")
    if has_labels not in (0, 1):
        raise FormatError(f"{source}: label flag must be 0 or 1, got {has_labels}")

    dtype = _PAYLOAD_DTYPES[version]
    payload_len = n * c * dtype.itemsize
    label_len = n * _LABEL_DTYPE.itemsize if has_labels else 0
    actual = len(raw) - HEADER.size
    if actual != payload_len + label_len:
        raise FormatError(
            f"{source}: payload is {actual} bytes, header (N={n}, C={c}, "
            f"labels={bool(has_labels)}) implies {payload_len + label_len}"
        )

    values = np.frombuffer(raw, dtype=dtype, count=n * c, offset=HEADER.size).reshape(n, c)
    labels = None
    if has_labels:
        labels = np.frombuffer(
            raw, dtype=_LABEL_DTYPE, count=n, offset=HEADER.size + payload_len
        ).astype(np.int64)
    return version, values, labels


def encode_logits(matrix: LogitMatrix) -> bytes:
    """Serialise a logit matrix into the version-1 binary container."""
    return _encode(matrix.data, VERSION_FLOAT32, matrix.labels)


def decode_logits(raw: bytes, split_tag: SplitTag = SplitTag.TRAIN, source: str = "<bytes>") -> LogitMatrix:
    """Parse a binary container into a validated logit matrix."""
    version, values, labels = _decode(raw, source)
    if version != VERSION_FLOAT32:
        raise FormatError(f"{source}: logits use container version 1, found {version}")
    return LogitMatrix(data=values, labels=labels, split_tag=split_tag)


def write_matrix(values: np.ndarray, path: PathLike, labels: Optional[np.ndarray] = None) -> str:
    """Persist any finite 2-D float matrix bit-exactly (version 2, float64), labels optional."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InputValidationError(f"matrix must be 2-D and non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputValidationError("matrix contains non-finite values")
    if labels is not None:
        labels = np.asarray(labels)
        if labels.shape != (arr.shape[0],) or np.any(labels < 0):
            raise InputValidationError("labels must be a non-negative vector with one entry per row")
    checksum = _atomic_write(path, _encode(arr, VERSION_FLOAT64, labels))
    artifact_logger.log_operation(
        "write", str(path), format="matrix", rows=arr.shape[0], cols=arr.shape[1], checksum=checksum
    )
    return checksum


def read_labelled_matrix(path: PathLike) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Read a matrix and its optional label block (either container version)."""
    raw = Path(path).read_bytes()
    _, values, labels = _decode(raw, str(path))
    artifact_logger.log_operation("read", str(path), format="matrix", rows=values.shape[0], cols=values.shape[1])
    return values.astype(np.float64), labels


def read_matrix(path: PathLike) -> np.ndarray:
    """Read a matrix written by ``write_matrix``."""
    return read_labelled_matrix(path)[0]


# ---------------------------------------------------------------------------
# CSV container
# ---------------------------------------------------------------------------

def _logit_columns(n_classes: int):
    return [f"l{j}" for j in range(n_classes)]


def encode_logits_csv(matrix: LogitMatrix) -> bytes:
    frame = pd.DataFrame(matrix.as_float64(), columns=_logit_columns(matrix.n_classes))
    if matrix.labels is not None:
        frame[LABEL_COLUMN] = matrix.labels
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    return buffer.getvalue().encode("utf-8")


def decode_logits_csv(raw: bytes, split_tag: SplitTag = SplitTag.TRAIN, source: str = "<csv>") -> LogitMatrix:
    try:
        frame = pd.read_csv(io.BytesIO(raw), float_precision="round_trip")
    except pd.errors.EmptyDataError:
        raise FormatError(f"{source}: empty CSV, a header row is mandatory")
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise FormatError(f"{source}: unparseable CSV: {e}")

    columns = [str(c) for c in frame.columns]
    has_labels = bool(columns) and columns[-1] == LABEL_COLUMN
    logit_cols = columns[:-1] if has_labels else columns
    if logit_cols != _logit_columns(len(logit_cols)):
        raise FormatError(
            f"{source}: header must be l0..l{{C-1}}[,{LABEL_COLUMN}], got {columns}"
        )

    try:
        values = frame[logit_cols].to_numpy(dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise FormatError(f"{source}: non-numeric logit cell: {e}")

    labels = None
    if has_labels:
        label_series = frame[LABEL_COLUMN]
        if label_series.isna().any():
            row = int(np.flatnonzero(label_series.isna().to_numpy())[0])
            raise InputValidationError(f"{source}: missing label at row {row}")
        try:
            labels = label_series.to_numpy(dtype=np.float64)
        except (TypeError, ValueError) as e:
            raise FormatError(f"{source}: non-numeric label cell: {e}")
    return LogitMatrix(data=values, labels=labels, split_tag=split_tag)


# ---------------------------------------------------------------------------
# Public logit API
# ---------------------------------------------------------------------------

def write_logits(
    matrix: LogitMatrix,
    path: PathLike,
    format: Optional[TensorFormat] = None,
) -> str:
    """
    Persist a logit matrix.

    Args:
        matrix: Validated logit matrix
        path: Destination file
        format: binary or csv (default: inferred from the suffix)

    Returns:
        CRC-32 checksum of the written bytes
    """
    fmt = TensorFormat(format) if format is not None else infer_format(path)
    raw = encode_logits(matrix) if fmt == TensorFormat.BINARY else encode_logits_csv(matrix)
    checksum = _atomic_write(path, raw)
    artifact_logger.log_operation(
        "write", str(path), format=fmt.value, split=matrix.split_tag.value,
        rows=matrix.n_samples, cols=matrix.n_classes, checksum=checksum
    )
    return checksum


def read_logits(
    path: PathLike,
    format: Optional[TensorFormat] = None,
    split_tag: SplitTag = SplitTag.TRAIN,
) -> LogitMatrix:
    """
    Load and validate a logit matrix.

    Raises:
        FormatError: malformed header or payload length mismatch
        InputValidationError: non-finite entry (with row/column) or bad label
    """
    fmt = TensorFormat(format) if format is not None else infer_format(path)
    raw = Path(path).read_bytes()
    if fmt == TensorFormat.BINARY:
        matrix = decode_logits(raw, split_tag=split_tag, source=str(path))
    else:
        matrix = decode_logits_csv(raw, split_tag=split_tag, source=str(path))
    artifact_logger.log_operation(
        "read", str(path), format=fmt.value, split=split_tag.value,
        rows=matrix.n_samples, cols=matrix.n_classes
    )
    return matrix


# ---------------------------------------------------------------------------
# Manifests
# ---------------------------------------------------------------------------

def manifest_entry(
    path: PathLike,
    split_tag: SplitTag,
    n_samples: int,
    n_columns: int,
    n_classes: int,
    checksum: str,
    root: Optional[PathLike] = None,
) -> ManifestEntry:
    """Describe a written file for a manifest (path stored relative to root)."""
    rel = Path(path)
    if root is not None:
        rel = Path(os.path.relpath(path, root))
    return ManifestEntry(
        path=rel.as_posix(),
        split_tag=split_tag,
        n_samples=n_samples,
        n_classes=n_classes,
        n_columns=n_columns,
        checksum=checksum,
    )


def write_manifest(manifest: DatasetManifest, path: PathLike) -> str:
    """Write a manifest as indented JSON."""
    raw = (manifest.model_dump_json(indent=2) + "\n").encode("utf-8")
    checksum = _atomic_write(path, raw)
    artifact_logger.log_operation("write", str(path), format="manifest", entries=len(manifest.entries))
    return checksum


def verify_manifest(manifest: DatasetManifest, root: PathLike) -> None:
    """Check every entry's checksum against the file on disk."""
    for entry in manifest.entries:
        target = Path(root) / entry.path
        if not target.exists():
            raise StaleArtifactError(f"manifest entry {entry.path} is missing on disk")
        actual = crc32_file(target)
        if actual != entry.checksum:
            artifact_logger.log_error(
                "verify", str(target), "checksum mismatch", expected=entry.checksum, actual=actual
            )
            raise StaleArtifactError(
                f"checksum of {entry.path} is {actual}, manifest records {entry.checksum}"
            )


def read_manifest(path: PathLike, verify: bool = True) -> DatasetManifest:
    """Load a manifest, verifying checksums relative to its directory."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: manifest is not valid JSON: {e}")
    manifest = DatasetManifest.model_validate(payload)
    if verify:
        verify_manifest(manifest, Path(path).parent)
    artifact_logger.log_operation("read", str(path), format="manifest", entries=len(manifest.entries))
    return manifest
