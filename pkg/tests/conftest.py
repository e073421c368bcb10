import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mediarank.store import MediaKind, MediaRecord
from mediarank.temporal import FrameFeatureSequence, LstmWeights


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_weights(rng, input_dim: int, units: int, scale: float = 0.5) -> LstmWeights:
    def arr(*shape):
        return scale * rng.standard_normal(shape)

    return LstmWeights(
        input_dim=input_dim,
        units=units,
        w_i=arr(units, input_dim),
        w_f=arr(units, input_dim),
        w_g=arr(units, input_dim),
        w_o=arr(units, input_dim),
        u_i=arr(units, units),
        u_f=arr(units, units),
        u_g=arr(units, units),
        u_o=arr(units, units),
        b_i=arr(units),
        b_f=arr(units),
        b_g=arr(units),
        b_o=arr(units),
    )


def make_record(
    item_id: str,
    frames: np.ndarray,
    kind: MediaKind = MediaKind.VIDEO,
    label: str | None = None,
) -> MediaRecord:
    return MediaRecord(
        item_id=item_id, kind=kind, frames=FrameFeatureSequence(frames), label=label
    )


def random_records(rng, count: int, dim: int, n_frames: int = 4, labels=None):
    """Seeded corpus of float32-exact video records."""
    records = []
    for i in range(count):
        frames = rng.standard_normal((n_frames, dim)).astype(np.float32).astype(np.float64)
        label = labels[i] if labels is not None else None
        records.append(make_record(f"rec-{i:05d}", frames, label=label))
    return records
