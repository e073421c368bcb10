"""Core vector type and the two comparison metrics used for ranking.

All arithmetic runs in 64-bit floats regardless of how vectors are stored
on disk; cosine values are clamped to [-1, 1] after the division so rounding
can never leak an out-of-range similarity downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import DimensionError, ZeroVectorError

__all__ = [
    "FeatureVector",
    "euclidean_distance",
    "cosine_similarity",
    "l2_norm",
]


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Fixed-dimension real embedding, immutable after construction.

    Coordinates must be finite; the backing array is made read-only so a
    vector can be shared freely between concurrent queries.
    """

    values: np.ndarray

    def __init__(self, values: Sequence[float] | np.ndarray) -> None:
        arr = np.array(values, dtype=np.float64, copy=True)
        if arr.ndim != 1:
            raise DimensionError(f"expected a 1-D vector, got {arr.ndim}-D data")
        if arr.size < 1:
            raise DimensionError("a feature vector needs at least one coordinate")
        if not np.all(np.isfinite(arr)):
            raise ValueError("feature vector coordinates must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def __len__(self) -> int:
        return self.dim

    def __iter__(self) -> Iterator[float]:
        return iter(self.values.tolist())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return bool(np.array_equal(self.values, other.values))

    def __repr__(self) -> str:
        head = ", ".join(f"{v:.6g}" for v in self.values[:4])
        tail = ", ..." if self.dim > 4 else ""
        return f"FeatureVector([{head}{tail}], dim={self.dim})"


def _check_dims(p: FeatureVector, q: FeatureVector) -> None:
    if p.dim != q.dim:
        raise DimensionError(f"dimension mismatch: {p.dim} vs {q.dim}")


def euclidean_distance(p: FeatureVector, q: FeatureVector) -> float:
    """Straight-line distance sqrt(sum_i (q_i - p_i)^2) between two vectors."""
    _check_dims(p, q)
    diff = q.values - p.values
    return float(math.sqrt(float(np.dot(diff, diff))))


def cosine_similarity(p: FeatureVector, q: FeatureVector) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1].

    A zero-norm query (``p``) is a caller error and raises ZeroVectorError.
    A zero-norm repository-side vector (``q``) yields 0.0 so one degenerate
    stored item cannot abort a whole query.
    """
    _check_dims(p, q)
    p_norm = float(np.linalg.norm(p.values))
    if p_norm == 0.0:
        raise ZeroVectorError("cosine similarity is undefined for a zero-norm query")
    q_norm = float(np.linalg.norm(q.values))
    if q_norm == 0.0:
        return 0.0
    cos = float(np.dot(p.values, q.values)) / (p_norm * q_norm)
    return max(-1.0, min(1.0, cos))


def l2_norm(v: FeatureVector) -> float:
    """Euclidean length sqrt(sum_i v_i^2)."""
    return float(np.linalg.norm(v.values))
