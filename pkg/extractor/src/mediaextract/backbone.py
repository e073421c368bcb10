"""MobileNet-V1-topology convolutional backbone in plain numpy.

The network is the standard 224x224 MobileNet V1 feature column: one 3x3
stride-2 convolution into 32 channels, thirteen depthwise-separable blocks
(depthwise 3x3 + pointwise 1x1, ReLU6 after every convolution, TF-style
"same" padding), then global average pooling over the 7x7 spatial grid into
a 1024-dimensional embedding.

Batch normalization is assumed folded into each convolution's weight and
bias, which is how trained parameters should be exported into the ``.npz``
weight file (arrays ``conv0_w``, ``conv0_b``, then ``dw{i}_w``, ``dw{i}_b``,
``pw{i}_w``, ``pw{i}_b`` for i = 1..13; HWIO layout for full convolutions,
HWC for depthwise kernels). Without a weight file the backbone falls back to
He-normal weights drawn from a fixed seed, so embeddings are deterministic
per backbone identifier even though they carry no ImageNet semantics.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["Backbone", "MOBILENET_V1_BLOCKS", "OUTPUT_DIM", "DEFAULT_SEED"]

OUTPUT_DIM = 1024
DEFAULT_SEED = 1924

# (stride, output channels) for the 13 depthwise-separable blocks.
MOBILENET_V1_BLOCKS = [
    (1, 64),
    (2, 128),
    (1, 128),
    (2, 256),
    (1, 256),
    (2, 512),
    (1, 512),
    (1, 512),
    (1, 512),
    (1, 512),
    (1, 512),
    (2, 1024),
    (1, 1024),
]


def _same_pad(size: int, kernel: int, stride: int) -> tuple[int, int]:
    """TF-convention zero padding: total pad so out = ceil(in / stride)."""
    out = -(-size // stride)
    total = max((out - 1) * stride + kernel - size, 0)
    before = total // 2
    return before, total - before


def _pad_hw(x: np.ndarray, kernel: int, stride: int) -> np.ndarray:
    (pt, pb) = _same_pad(x.shape[0], kernel, stride)
    (pl, pr) = _same_pad(x.shape[1], kernel, stride)
    if pt == pb == pl == pr == 0:
        return x
    return np.pad(x, ((pt, pb), (pl, pr), (0, 0)))


def _relu6(x: np.ndarray) -> np.ndarray:
    return np.clip(x, 0.0, 6.0)


def _conv2d(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, stride: int) -> np.ndarray:
    """Full 3x3 convolution via im2col; weight layout is (kh, kw, cin, cout)."""
    kh, kw, cin, cout = weight.shape
    x = _pad_hw(x, kh, stride)
    h_out = (x.shape[0] - kh) // stride + 1
    w_out = (x.shape[1] - kw) // stride + 1
    windows = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(0, 1))
    windows = windows[::stride, ::stride]  # (h_out, w_out, cin, kh, kw)
    columns = windows.transpose(0, 1, 3, 4, 2).reshape(h_out * w_out, kh * kw * cin)
    kernel = weight.reshape(kh * kw * cin, cout)
    return (columns @ kernel + bias).reshape(h_out, w_out, cout)


def _depthwise3x3(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, stride: int) -> np.ndarray:
    """Depthwise 3x3: per-channel accumulation over the nine taps."""
    x = _pad_hw(x, 3, stride)
    h_out = (x.shape[0] - 3) // stride + 1
    w_out = (x.shape[1] - 3) // stride + 1
    out = np.zeros((h_out, w_out, x.shape[2]), dtype=x.dtype)
    for dy in range(3):
        for dx in range(3):
            view = x[dy : dy + h_out * stride : stride, dx : dx + w_out * stride : stride]
            out += view * weight[dy, dx]
    return out + bias


@dataclass(frozen=True)
class _Layer:
    kind: str  # "conv", "dw", "pw"
    weight: np.ndarray
    bias: np.ndarray
    stride: int


class Backbone:
    """Deterministic image embedder; ``embed`` maps HWC float input to 1024-d."""

    def __init__(self, weights_path: str | Path | None = None, seed: int = DEFAULT_SEED):
        self.identifier = (
            f"mobilenet-v1-npz:{Path(weights_path).name}"
            if weights_path
            else f"mobilenet-v1-seeded:{seed}"
        )
        params = (
            self._load_npz(weights_path) if weights_path else self._seeded_params(seed)
        )
        self._layers = self._assemble(params)

    @property
    def output_dim(self) -> int:
        return OUTPUT_DIM

    @staticmethod
    def _param_shapes() -> list[tuple[str, tuple[int, ...]]]:
        shapes: list[tuple[str, tuple[int, ...]]] = [
            ("conv0_w", (3, 3, 3, 32)),
            ("conv0_b", (32,)),
        ]
        cin = 32
        for i, (_, cout) in enumerate(MOBILENET_V1_BLOCKS, start=1):
            shapes.append((f"dw{i}_w", (3, 3, cin)))
            shapes.append((f"dw{i}_b", (cin,)))
            shapes.append((f"pw{i}_w", (1, 1, cin, cout)))
            shapes.append((f"pw{i}_b", (cout,)))
            cin = cout
        return shapes

    def _seeded_params(self, seed: int) -> dict[str, np.ndarray]:
        rng = np.random.default_rng(seed)
        params: dict[str, np.ndarray] = {}
        for name, shape in self._param_shapes():
            if name.endswith("_b"):
                params[name] = np.zeros(shape, dtype=np.float32)
                continue
            fan_in = int(np.prod(shape[:-1])) if len(shape) == 4 else 9
            scale = np.sqrt(2.0 / fan_in)
            params[name] = (scale * rng.standard_normal(shape)).astype(np.float32)
        return params

    def _load_npz(self, path: str | Path) -> dict[str, np.ndarray]:
        with np.load(path) as bundle:
            params = {}
            for name, shape in self._param_shapes():
                if name not in bundle:
                    raise ValueError(f"{path}: missing parameter {name}")
                arr = np.asarray(bundle[name], dtype=np.float32)
                if arr.shape != shape:
                    raise ValueError(
                        f"{path}: parameter {name} has shape {arr.shape}, expected {shape}"
                    )
                params[name] = arr
        return params

    @staticmethod
    def _assemble(params: dict[str, np.ndarray]) -> list[_Layer]:
        layers = [_Layer("conv", params["conv0_w"], params["conv0_b"], 2)]
        for i, (stride, _) in enumerate(MOBILENET_V1_BLOCKS, start=1):
            layers.append(_Layer("dw", params[f"dw{i}_w"], params[f"dw{i}_b"], stride))
            layers.append(_Layer("pw", params[f"pw{i}_w"], params[f"pw{i}_b"], 1))
        return layers

    def embed(self, image: np.ndarray) -> np.ndarray:
        """Embed one preprocessed HWC image (float32, roughly [-1, 1])."""
        if image.ndim != 3 or image.shape[2] != 3:
            raise ValueError(f"expected an (h, w, 3) image, got shape {image.shape}")
        x = np.ascontiguousarray(image, dtype=np.float32)
        for layer in self._layers:
            if layer.kind == "dw":
                x = _depthwise3x3(x, layer.weight, layer.bias, layer.stride)
            else:
                x = _conv2d(x, layer.weight, layer.bias, layer.stride)
            x = _relu6(x)
        return x.mean(axis=(0, 1)).astype(np.float32)
