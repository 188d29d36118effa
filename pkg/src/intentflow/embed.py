"""Binary embedding interchange format and similarity helpers.

Layout of a matrix file: bytes 0-7 the ASCII magic ``UTTEMB01``, bytes 8-15
the row count n (u64 little-endian), bytes 16-23 the dimension d (u64
little-endian), then n*d float32 little-endian values in row-major order.
A sidecar keys file holds one UTF-8 utterance key per line (LF-terminated),
line i naming row i. Producers in any language emit this; the loader here
is the consumer contract.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmbeddingFormatError,
    KeyCountMismatchError,
    MagicMismatchError,
    NonFiniteValueError,
    TruncatedPayloadError,
    UndefinedSimilarityError,
    ValidationError,
)

MAGIC = b"UTTEMB01"
_HEADER = struct.Struct("<8sQQ")


@dataclass
class EmbeddingMatrix:
    """A float32 matrix with one row per utterance key."""

    values: np.ndarray
    keys: list[str]
    key_to_row: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.ndim != 2:
            raise ValidationError("embedding values must be a 2-d array")
        if len(self.keys) != self.values.shape[0]:
            raise KeyCountMismatchError(
                f"{len(self.keys)} keys for {self.values.shape[0]} rows"
            )
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteValueError("embedding values must all be finite")
        self.key_to_row = {}
        for i, key in enumerate(self.keys):
            if key in self.key_to_row:
                raise ValidationError(f"duplicate embedding key {key!r}")
            self.key_to_row[key] = i

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def row(self, key: str) -> np.ndarray:
        if key not in self.key_to_row:
            raise ValidationError(f"no embedding row for key {key!r}")
        return self.values[self.key_to_row[key]]

    def rows(self, keys: list[str]) -> np.ndarray:
        """Submatrix for ``keys`` in the given order; missing keys raise."""
        idx = np.empty(len(keys), dtype=np.int64)
        for i, key in enumerate(keys):
            if key not in self.key_to_row:
                raise ValidationError(f"no embedding row for key {key!r}")
            idx[i] = self.key_to_row[key]
        return self.values[idx]


def write_embeddings(
    matrix: EmbeddingMatrix, emb_path: str | Path, keys_path: str | Path
) -> None:
    """Write the matrix file and its keys sidecar."""
    for key in matrix.keys:
        if "\n" in key or "\r" in key:
            raise ValidationError(f"key {key!r} contains a line break")
    with open(emb_path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, matrix.n, matrix.dim))
        fh.write(np.ascontiguousarray(matrix.values, dtype="<f4").tobytes())
    with open(keys_path, "w", encoding="utf-8", newline="") as fh:
        for key in matrix.keys:
            fh.write(key + "\n")


def load_embeddings(emb_path: str | Path, keys_path: str | Path) -> EmbeddingMatrix:
    """Load and validate an interchange pair written by any producer."""
    with open(emb_path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise TruncatedPayloadError(f"{emb_path}: shorter than the 24-byte header")
    magic, n, d = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise MagicMismatchError(f"{emb_path}: bad magic {magic!r}")
    expected = _HEADER.size + n * d * 4
    if len(blob) < expected:
        raise TruncatedPayloadError(
            f"{emb_path}: expected {expected} bytes for {n}x{d}, got {len(blob)}"
        )
    if len(blob) > expected:
        raise EmbeddingFormatError(
            f"{emb_path}: {len(blob) - expected} trailing bytes after payload"
        )
    values = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size).reshape(n, d).copy()
    if not np.all(np.isfinite(values)):
        raise NonFiniteValueError(f"{emb_path}: non-finite value in payload")

    with open(keys_path, encoding="utf-8") as fh:
        content = fh.read()
    keys = content.splitlines()
    if len(keys) != n:
        raise KeyCountMismatchError(
            f"{keys_path}: {len(keys)} keys for {n} rows"
        )
    if any(not k for k in keys):
        raise ValidationError(f"{keys_path}: blank key line")
    return EmbeddingMatrix(values=values, keys=keys)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two vectors, computed in float64."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise UndefinedSimilarityError("cosine similarity of a zero vector")
    return float(np.dot(a, b) / (na * nb))
