"""PCA fitting and projection for compressing embeddings before comparison.

The fit keeps the smallest number of principal directions whose cumulative
explained-variance ratio reaches the requested threshold (0.90 by default).
Each component's sign is fixed so that its largest-magnitude coordinate is
positive, making refits on identical data bit-for-bit reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ._binio import atomic_write, open_reader
from .errors import (
    ArgumentError,
    DegenerateDataError,
    DimensionError,
    FormatError,
    InsufficientDataError,
)
from .vectors import FeatureVector

__all__ = [
    "PcaModel",
    "DEFAULT_VARIANCE_THRESHOLD",
    "pca_fit",
    "pca_transform",
    "save_pca_model",
    "load_pca_model",
]

DEFAULT_VARIANCE_THRESHOLD = 0.90

_MRPC_MAGIC = b"MRPC"
_MRPC_VERSION = 1


@dataclass(frozen=True, eq=False)
class PcaModel:
    """Fitted reduction: column mean, orthonormal component rows, variance ratios."""

    mean: np.ndarray
    components: np.ndarray
    explained_variance_ratio: np.ndarray

    def __post_init__(self) -> None:
        mean = np.array(self.mean, dtype=np.float64, copy=True)
        comp = np.array(self.components, dtype=np.float64, copy=True)
        ratio = np.array(self.explained_variance_ratio, dtype=np.float64, copy=True)
        if mean.ndim != 1 or comp.ndim != 2 or ratio.ndim != 1:
            raise DimensionError("mean must be 1-D, components 2-D, ratios 1-D")
        r, d = comp.shape
        if mean.shape[0] != d or ratio.shape[0] != r or not 1 <= r <= d:
            raise DimensionError(
                f"inconsistent model shapes: mean {mean.shape}, components {comp.shape}, "
                f"ratios {ratio.shape}"
            )
        for arr in (mean, comp, ratio):
            if not np.all(np.isfinite(arr)):
                raise ValueError("PCA model arrays must be finite")
            arr.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "components", comp)
        object.__setattr__(self, "explained_variance_ratio", ratio)

    @property
    def input_dim(self) -> int:
        return int(self.components.shape[1])

    @property
    def output_dim(self) -> int:
        return int(self.components.shape[0])


def _as_matrix(data: np.ndarray | Sequence[FeatureVector]) -> np.ndarray:
    if isinstance(data, np.ndarray):
        matrix = np.asarray(data, dtype=np.float64)
    else:
        matrix = np.stack([v.values for v in data])
    if matrix.ndim != 2:
        raise DimensionError(f"expected an (m, d) matrix, got shape {matrix.shape}")
    return matrix


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Flip each component so its largest-|coordinate| entry is positive.

    argmax on |row| takes the lowest index on ties, which pins the convention.
    """
    flipped = components.copy()
    for row in flipped:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return flipped


def pca_fit(
    data: np.ndarray | Sequence[FeatureVector],
    variance_threshold: float = DEFAULT_VARIANCE_THRESHOLD,
) -> PcaModel:
    """Fit principal directions of the sample covariance (m-1 denominator).

    Keeps the smallest r whose cumulative explained-variance ratio reaches
    ``variance_threshold``. Needs at least two samples and nonzero total
    variance.
    """
    if not 0.0 < variance_threshold <= 1.0:
        raise ArgumentError(
            f"variance_threshold must lie in (0, 1], got {variance_threshold}"
        )
    matrix = _as_matrix(data)
    m, d = matrix.shape
    if m < 2:
        raise InsufficientDataError(f"PCA needs at least 2 samples, got {m}")
    mean = matrix.mean(axis=0)
    centered = matrix - mean
    # SVD of the centered data; the covariance-eigensolve route is kept as an
    # independent oracle in the test suite.
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    variances = (singular**2) / (m - 1)
    total = float(variances.sum())
    if total == 0.0:
        raise DegenerateDataError("data has zero total variance")
    ratios = variances / total
    cumulative = np.cumsum(ratios)
    r = int(np.searchsorted(cumulative, variance_threshold - 1e-12) + 1)
    r = min(r, len(ratios))
    components = _fix_signs(vt[:r])
    return PcaModel(
        mean=mean,
        components=components,
        explained_variance_ratio=ratios[:r],
    )


def pca_transform(model: PcaModel, v: FeatureVector) -> FeatureVector:
    """Project a vector into the reduced space: components @ (v - mean)."""
    if v.dim != model.input_dim:
        raise DimensionError(
            f"vector dim {v.dim} does not match model input_dim {model.input_dim}"
        )
    return FeatureVector(model.components @ (v.values - model.mean))


def transform_matrix(model: PcaModel, matrix: np.ndarray) -> np.ndarray:
    """Batch counterpart of pca_transform for (m, d) matrices."""
    if matrix.shape[1] != model.input_dim:
        raise DimensionError(
            f"matrix dim {matrix.shape[1]} does not match model input_dim {model.input_dim}"
        )
    return (matrix - model.mean) @ model.components.T


def _write_pca_body(w, model: PcaModel) -> None:
    w.bytes(_MRPC_MAGIC)
    w.u32(_MRPC_VERSION)
    w.u32(model.input_dim)
    w.u32(model.output_dim)
    w.f32_array(model.mean)
    w.f32_array(model.components)
    w.f32_array(model.explained_variance_ratio)


def _read_pca_block(r, path: str | Path) -> PcaModel:
    r.expect_magic(_MRPC_MAGIC, "MRPC")
    r.expect_version(_MRPC_VERSION, "MRPC")
    d = r.u32("input_dim")
    out = r.u32("output_dim")
    if d < 1 or out < 1 or out > d:
        raise FormatError(f"{path}: invalid PCA dimensions d={d}, r={out}")
    mean = r.f32_array(d, "mean")
    components = r.f32_array(out * d, "components").reshape(out, d)
    ratios = r.f32_array(out, "variance ratios")
    return PcaModel(mean=mean, components=components, explained_variance_ratio=ratios)


def save_pca_model(model: PcaModel, path: str | Path) -> None:
    """Write an MRPC file: magic, version, d, r, mean, components, ratios (f32 LE)."""
    atomic_write(path, lambda w: _write_pca_body(w, model))


def load_pca_model(path: str | Path) -> PcaModel:
    fh, r = open_reader(path)
    with fh:
        model = _read_pca_block(r, path)
        r.expect_eof()
    return model
