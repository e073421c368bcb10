"""Writer for the MRF1 embedding file format consumed by the retrieval engine.

Layout: magic "MRF1", u32 version (=1), u32 dim, u8 kind-default, u64 record
count, then per record: u32 id byte-length, UTF-8 id bytes, u8 kind
(0=image, 1=video), u32 frame count, frames*dim float32 little-endian.
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["EmbeddingRecord", "write_mrf1", "KIND_IMAGE", "KIND_VIDEO"]

MAGIC = b"MRF1"
VERSION = 1
KIND_IMAGE = 0
KIND_VIDEO = 1


@dataclass(frozen=True)
class EmbeddingRecord:
    item_id: str
    kind: int  # KIND_IMAGE or KIND_VIDEO
    frames: np.ndarray  # (n_frames, dim) float32

    def __post_init__(self) -> None:
        if not self.item_id:
            raise ValueError("item_id must be non-empty")
        if self.kind not in (KIND_IMAGE, KIND_VIDEO):
            raise ValueError(f"bad kind {self.kind}")
        frames = np.ascontiguousarray(self.frames, dtype=np.float32)
        if frames.ndim != 2 or frames.shape[0] < 1:
            raise ValueError(f"frames must be (n, dim), got {frames.shape}")
        if self.kind == KIND_IMAGE and frames.shape[0] != 1:
            raise ValueError("image records carry exactly one frame")
        object.__setattr__(self, "frames", frames)

    @property
    def dim(self) -> int:
        return int(self.frames.shape[1])


def write_mrf1(records: list[EmbeddingRecord], path: str | Path) -> None:
    dims = {record.dim for record in records}
    if len(dims) > 1:
        raise ValueError(f"records mix dimensions {sorted(dims)}")
    ids = [record.item_id for record in records]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate item ids")
    dim = dims.pop() if dims else 0
    n_videos = sum(1 for r in records if r.kind == KIND_VIDEO)
    default_kind = KIND_VIDEO if n_videos * 2 > len(records) else KIND_IMAGE

    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", VERSION))
            fh.write(struct.pack("<I", dim))
            fh.write(struct.pack("<B", default_kind))
            fh.write(struct.pack("<Q", len(records)))
            for record in records:
                raw_id = record.item_id.encode("utf-8")
                fh.write(struct.pack("<I", len(raw_id)))
                fh.write(raw_id)
                fh.write(struct.pack("<B", record.kind))
                fh.write(struct.pack("<I", record.frames.shape[0]))
                fh.write(record.frames.astype("<f4").tobytes())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
