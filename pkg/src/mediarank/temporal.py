"""Turning a video's frame-embedding sequence into one vector.

A clip is segmented into chunks, a fixed number of frames is sampled per
chunk with uniform temporal coverage, and the sampled frame embeddings are
collapsed by an aggregation strategy: the final hidden state of a recurrent
pass (the order-sensitive default), or a pooling fallback.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ._binio import atomic_write, open_reader
from .errors import ConfigurationError, DimensionError
from .vectors import FeatureVector

__all__ = [
    "FrameFeatureSequence",
    "LstmWeights",
    "AggregationKind",
    "AggregationStrategy",
    "DEFAULT_FRAMES_PER_CHUNK",
    "sample_frame_indices",
    "segment_chunks",
    "lstm_forward",
    "aggregate",
    "save_lstm_weights",
    "load_lstm_weights",
]

DEFAULT_FRAMES_PER_CHUNK = 16

# Trailing chunks shorter than this fraction of a full chunk merge backwards.
_TAIL_MERGE_FRACTION = 0.25

_MRLW_MAGIC = b"MRLW"
_MRLW_VERSION = 1


@dataclass(frozen=True, eq=False)
class FrameFeatureSequence:
    """Ordered per-frame embeddings of one media item, stored as an n x d matrix."""

    frames: np.ndarray

    def __init__(self, frames: np.ndarray | Sequence[FeatureVector]) -> None:
        if isinstance(frames, np.ndarray):
            matrix = np.array(frames, dtype=np.float64, copy=True)
        else:
            rows = list(frames)
            if not rows:
                raise DimensionError("a frame sequence needs at least one frame")
            matrix = np.stack([f.values for f in rows])
        if matrix.ndim != 2 or matrix.shape[0] < 1 or matrix.shape[1] < 1:
            raise DimensionError(
                f"expected an (n_frames, dim) matrix with n_frames >= 1, got shape {matrix.shape}"
            )
        if not np.all(np.isfinite(matrix)):
            raise ValueError("frame features must be finite")
        matrix.setflags(write=False)
        object.__setattr__(self, "frames", matrix)

    @property
    def n_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def dim(self) -> int:
        return int(self.frames.shape[1])

    def frame(self, index: int) -> FeatureVector:
        return FeatureVector(self.frames[index])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FrameFeatureSequence):
            return NotImplemented
        return bool(np.array_equal(self.frames, other.frames))


_GATES = ("i", "f", "g", "o")


@dataclass(frozen=True, eq=False)
class LstmWeights:
    """Parameters of the recurrent aggregator, one (W, U, b) triple per gate.

    Gate order and equations are fixed: i, f, g, o with
    c_t = f * c_{t-1} + i * g and h_t = o * tanh(c_t); single layer, no
    peepholes. The on-disk order of the MRLW format matches this gate order.
    """

    input_dim: int
    units: int
    w_i: np.ndarray
    w_f: np.ndarray
    w_g: np.ndarray
    w_o: np.ndarray
    u_i: np.ndarray
    u_f: np.ndarray
    u_g: np.ndarray
    u_o: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_g: np.ndarray
    b_o: np.ndarray

    def __post_init__(self) -> None:
        d, h = self.input_dim, self.units
        if d < 1 or h < 1:
            raise DimensionError(f"input_dim and units must be positive, got ({d}, {h})")
        for gate in _GATES:
            for prefix, shape in (("w", (h, d)), ("u", (h, h)), ("b", (h,))):
                name = f"{prefix}_{gate}"
                arr = np.array(getattr(self, name), dtype=np.float64, copy=True)
                if arr.shape != shape:
                    raise DimensionError(
                        f"{name} has shape {arr.shape}, expected {shape}"
                    )
                if not np.all(np.isfinite(arr)):
                    raise ValueError(f"{name} contains non-finite values")
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    def arrays(self) -> list[np.ndarray]:
        """All parameter arrays in serialization order: W_i..W_o, U_i..U_o, b_i..b_o."""
        out = []
        for prefix in ("w", "u", "b"):
            out.extend(getattr(self, f"{prefix}_{gate}") for gate in _GATES)
        return out


class AggregationKind(enum.Enum):
    MEAN_POOL = 0
    MAX_POOL = 1
    LAST_FRAME = 2
    LSTM_FINAL_HIDDEN = 3

    @classmethod
    def from_name(cls, name: str) -> "AggregationKind":
        try:
            return _KIND_NAMES[name]
        except KeyError:
            raise ConfigurationError(
                f"unknown aggregation {name!r}, expected one of {sorted(_KIND_NAMES)}"
            ) from None

    @property
    def cli_name(self) -> str:
        return _KIND_TO_NAME[self]


_KIND_NAMES = {
    "mean": AggregationKind.MEAN_POOL,
    "max": AggregationKind.MAX_POOL,
    "last": AggregationKind.LAST_FRAME,
    "lstm": AggregationKind.LSTM_FINAL_HIDDEN,
}
_KIND_TO_NAME = {kind: name for name, kind in _KIND_NAMES.items()}


@dataclass(frozen=True)
class AggregationStrategy:
    """Aggregation kind plus recurrent weights when the kind needs them."""

    kind: AggregationKind
    weights: LstmWeights | None = None

    def __post_init__(self) -> None:
        needs = self.kind is AggregationKind.LSTM_FINAL_HIDDEN
        if needs and self.weights is None:
            raise ConfigurationError("lstm aggregation requires weights")
        if not needs and self.weights is not None:
            raise ConfigurationError(
                f"{self.kind.cli_name} aggregation takes no weights"
            )

    def output_dim(self, input_dim: int) -> int:
        if self.kind is AggregationKind.LSTM_FINAL_HIDDEN:
            assert self.weights is not None
            return self.weights.units
        return input_dim


def sample_frame_indices(total_frames: int, target: int) -> list[int]:
    """Indices floor(j * total / target) for j = 0..target-1: uniform temporal coverage.

    Always returns exactly ``target`` indices; when the clip has fewer frames
    than requested, indices repeat rather than padding with synthetic frames.
    """
    if total_frames < 1 or target < 1:
        raise ValueError("total_frames and target must be >= 1")
    return [j * total_frames // target for j in range(target)]


def segment_chunks(
    total_frames: int, fps: float, chunk_seconds: float
) -> list[tuple[int, int]]:
    """Consecutive half-open [start, end) frame ranges covering the whole clip.

    Each chunk spans round(fps * chunk_seconds) frames; a trailing remnant
    shorter than a quarter chunk is merged into its predecessor so no chunk
    yields a degenerate representation.
    """
    if total_frames < 1:
        raise ValueError("total_frames must be >= 1")
    if fps <= 0 or chunk_seconds <= 0:
        raise ValueError("fps and chunk_seconds must be positive")
    chunk_len = max(1, round(fps * chunk_seconds))
    ranges = [
        (start, min(start + chunk_len, total_frames))
        for start in range(0, total_frames, chunk_len)
    ]
    if len(ranges) > 1:
        last_start, last_end = ranges[-1]
        if (last_end - last_start) < _TAIL_MERGE_FRACTION * chunk_len:
            ranges[-2] = (ranges[-2][0], last_end)
            ranges.pop()
    return ranges


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def lstm_forward(seq: FrameFeatureSequence, weights: LstmWeights) -> FeatureVector:
    """Final hidden state of the recurrence over the frame sequence.

    h_0 = c_0 = 0; per step: i = sig(W_i x + U_i h + b_i), f, o likewise,
    g = tanh(W_g x + U_g h + b_g), c = f*c + i*g, h = o*tanh(c).
    """
    if seq.dim != weights.input_dim:
        raise DimensionError(
            f"sequence dim {seq.dim} does not match weights input_dim {weights.input_dim}"
        )
    h = np.zeros(weights.units)
    c = np.zeros(weights.units)
    for x in seq.frames:
        i = _sigmoid(weights.w_i @ x + weights.u_i @ h + weights.b_i)
        f = _sigmoid(weights.w_f @ x + weights.u_f @ h + weights.b_f)
        g = np.tanh(weights.w_g @ x + weights.u_g @ h + weights.b_g)
        o = _sigmoid(weights.w_o @ x + weights.u_o @ h + weights.b_o)
        c = f * c + i * g
        h = o * np.tanh(c)
    return FeatureVector(h)


def aggregate(seq: FrameFeatureSequence, strategy: AggregationStrategy) -> FeatureVector:
    """Collapse a frame sequence into one vector per the chosen strategy."""
    kind = strategy.kind
    if kind is AggregationKind.LSTM_FINAL_HIDDEN:
        if strategy.weights is None:
            raise ConfigurationError("lstm aggregation requires weights")
        return lstm_forward(seq, strategy.weights)
    if kind is AggregationKind.MEAN_POOL:
        return FeatureVector(seq.frames.mean(axis=0))
    if kind is AggregationKind.MAX_POOL:
        return FeatureVector(seq.frames.max(axis=0))
    if kind is AggregationKind.LAST_FRAME:
        return FeatureVector(seq.frames[-1])
    raise ConfigurationError(f"unsupported aggregation kind {kind!r}")


def save_lstm_weights(weights: LstmWeights, path: str | Path) -> None:
    """Write an MRLW file: magic, version, d, h, then the 12 arrays as f32 LE."""

    def body(w):
        w.bytes(_MRLW_MAGIC)
        w.u32(_MRLW_VERSION)
        w.u32(weights.input_dim)
        w.u32(weights.units)
        for arr in weights.arrays():
            w.f32_array(arr)

    atomic_write(path, body)


def load_lstm_weights(path: str | Path) -> LstmWeights:
    fh, r = open_reader(path)
    with fh:
        r.expect_magic(_MRLW_MAGIC, "MRLW")
        r.expect_version(_MRLW_VERSION, "MRLW")
        d = r.u32("input_dim")
        h = r.u32("units")
        if d < 1 or h < 1:
            raise FormatError(f"{path}: non-positive dimensions ({d}, {h})")
        weights = _read_lstm_arrays(r, d, h)
        r.expect_eof()
    return weights


def _read_lstm_arrays(r, d: int, h: int) -> LstmWeights:
    """Read the 12 gate arrays in serialization order (shared with MRIX embedding)."""
    kwargs: dict[str, np.ndarray] = {}
    for prefix, shape in (("w", (h, d)), ("u", (h, h)), ("b", (h,))):
        count = shape[0] * (shape[1] if len(shape) == 2 else 1)
        for gate in _GATES:
            name = f"{prefix}_{gate}"
            kwargs[name] = r.f32_array(count, name).reshape(shape)
    return LstmWeights(input_dim=d, units=h, **kwargs)
