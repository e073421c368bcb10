"""Seeded synthetic corpus generator for benchmarks and acceptance runs.

The generator is reproducible across implementations, so the exact draw
procedure is part of the contract (also documented in the README):

* PRNG: SplitMix64. State advances by the odd constant 0x9E3779B97F4A7C15;
  each output is the finalizer mix of the new state (xor-shift 30, multiply
  0xBF58476D1CE4E5B9, xor-shift 27, multiply 0x94D049BB133111EB,
  xor-shift 31), all modulo 2**64.
* Uniforms: u = (next() >> 11) / 2**53 in [0, 1).
* Gaussians: Box-Muller on consecutive uniforms u1, u2:
  z0 = sqrt(-2 ln(1 - u1)) * cos(2 pi u2), z1 = same * sin(2 pi u2);
  draws are consumed in (z0, z1) order, one pair at a time, no caching
  across calls that request an even number of values.
* Cluster centers: one stream seeded with the master seed, drawing
  coordinates cluster-major as uniform(-1, 1) = 2u - 1.
* Per-item stream: item ordinal t = cluster_index * per_cluster + item_index
  seeds its own SplitMix64 with mix64(seed XOR ((t + 1) * 0x9E3779B97F4A7C15
  mod 2**64)) where mix64 is the finalizer above. The stream first draws one
  gaussian for the item's radial offset, then frame values frame-major,
  coordinate-major.
* Item vectors: item = center + radial_sigma * g0 * unit(center); each frame
  adds sigma * N(0, 1) per coordinate on top of the item vector. The radial
  term spreads items along their cluster's direction, which is what makes
  euclidean and cosine ranking disagree the way real embedding norms do.
* All coordinates are quantized to 32-bit floats at generation time so the
  in-memory corpus matches its serialized form exactly.

Labels are ``class-<cluster index>`` and ids ``item-<cluster>-<index>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .store import MediaKind, MediaRecord
from .temporal import FrameFeatureSequence

__all__ = [
    "SplitMix64",
    "SynthSpec",
    "generate_corpus",
]

_GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1


def _mix64(z: int) -> int:
    """SplitMix64 finalizer, also used to derive per-item seeds."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    """Scalar SplitMix64 stream with uniform and Box-Muller gaussian draws."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK
        return _mix64(self._state)

    def next_unit(self) -> float:
        # 53-bit mantissa worth of randomness in [0, 1)
        return (self.next_u64() >> 11) * (2.0**-53)

    def next_uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.next_unit()

    def next_gaussian_pair(self) -> tuple[float, float]:
        u1 = self.next_unit()
        u2 = self.next_unit()
        radius = math.sqrt(-2.0 * math.log(1.0 - u1))
        angle = 2.0 * math.pi * u2
        return radius * math.cos(angle), radius * math.sin(angle)

    def gaussians(self, count: int) -> list[float]:
        out: list[float] = []
        while len(out) < count:
            out.extend(self.next_gaussian_pair())
        return out[:count]


def _item_seed(seed: int, ordinal: int) -> int:
    return _mix64(seed ^ (((ordinal + 1) * _GOLDEN) & _MASK))


def _u64_stream(seed: int, count: int) -> np.ndarray:
    """Vectorized SplitMix64 outputs; bit-identical to the scalar stream."""
    states = (np.uint64(seed) + np.arange(1, count + 1, dtype=np.uint64) * np.uint64(_GOLDEN))
    z = states
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _gaussians_vec(seed: int, count: int) -> np.ndarray:
    """Vectorized Box-Muller matching SplitMix64.gaussians draw-for-draw."""
    pairs = (count + 1) // 2
    units = (_u64_stream(seed, 2 * pairs) >> np.uint64(11)).astype(np.float64) * (2.0**-53)
    u1, u2 = units[0::2], units[1::2]
    radius = np.sqrt(-2.0 * np.log(1.0 - u1))
    angle = 2.0 * np.pi * u2
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out[:count]


@dataclass(frozen=True)
class SynthSpec:
    clusters: int
    per_cluster: int
    dim: int
    frames: int
    seed: int
    sigma: float = 0.1
    radial_sigma: float = 2.0

    def __post_init__(self) -> None:
        if min(self.clusters, self.per_cluster, self.dim, self.frames) < 1:
            raise ArgumentError("clusters, per_cluster, dim and frames must be >= 1")
        if self.sigma < 0 or self.radial_sigma < 0:
            raise ArgumentError("sigma and radial_sigma must be non-negative")


def generate_corpus(spec: SynthSpec) -> list[MediaRecord]:
    """Build the labeled video corpus described by ``spec``.

    Deterministic in the spec alone; see the module docstring for the exact
    draw procedure.
    """
    centers_rng = SplitMix64(spec.seed)
    centers = np.array(
        [
            [centers_rng.next_uniform(-1.0, 1.0) for _ in range(spec.dim)]
            for _ in range(spec.clusters)
        ]
    )
    records: list[MediaRecord] = []
    for ci in range(spec.clusters):
        center = centers[ci]
        norm = float(np.linalg.norm(center))
        direction = center / norm if norm > 0 else np.zeros(spec.dim)
        for j in range(spec.per_cluster):
            ordinal = ci * spec.per_cluster + j
            seed = _item_seed(spec.seed, ordinal)
            draws = _gaussians_vec(seed, 1 + spec.frames * spec.dim)
            item_vec = center + spec.radial_sigma * draws[0] * direction
            noise = draws[1:].reshape(spec.frames, spec.dim)
            frames = (item_vec + spec.sigma * noise).astype(np.float32).astype(np.float64)
            records.append(
                MediaRecord(
                    item_id=f"item-{ci:02d}-{j:04d}",
                    kind=MediaKind.VIDEO,
                    frames=FrameFeatureSequence(frames),
                    label=f"class-{ci:02d}",
                )
            )
    return records
