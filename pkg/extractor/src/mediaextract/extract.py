"""Batch extraction: media files -> backbone embeddings -> one MRF1 file.

A corrupt or unreadable file never aborts a batch; it lands in the job
report's error list and processing continues. The output file is written
once, at the end, by a single writer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backbone import Backbone
from .media import (
    DEFAULT_RESOLUTION,
    IMAGE_SUFFIXES,
    VIDEO_SUFFIXES,
    MediaError,
    load_image,
    load_video_frames,
)
from .mrf1 import KIND_IMAGE, KIND_VIDEO, EmbeddingRecord, write_mrf1

__all__ = ["ExtractionJob", "JobReport", "extract_image", "extract_video"]

DEFAULT_FRAMES = 16


def extract_image(
    path: str | Path, backbone: Backbone, resolution: int = DEFAULT_RESOLUTION
) -> EmbeddingRecord:
    """One image file -> a single-frame record of the backbone's pooled activation."""
    frame = load_image(path, resolution)
    vector = backbone.embed(frame)
    return EmbeddingRecord(
        item_id=Path(path).name, kind=KIND_IMAGE, frames=vector[np.newaxis, :]
    )


def extract_video(
    path: str | Path,
    backbone: Backbone,
    n_frames: int = DEFAULT_FRAMES,
    resolution: int = DEFAULT_RESOLUTION,
) -> EmbeddingRecord:
    """One video file -> ``n_frames`` embeddings in temporal order."""
    frames = load_video_frames(path, n_frames, resolution)
    embedded = np.stack([backbone.embed(frame) for frame in frames])
    return EmbeddingRecord(item_id=Path(path).name, kind=KIND_VIDEO, frames=embedded)


@dataclass
class JobReport:
    written: list[str] = field(default_factory=list)
    errors: list[tuple[str, str]] = field(default_factory=list)


@dataclass
class ExtractionJob:
    """A batch over one directory of images or videos."""

    inputs: list[Path]
    kind: str  # "image" or "video"
    out_path: Path
    n_frames: int = DEFAULT_FRAMES
    resolution: int = DEFAULT_RESOLUTION
    backbone: Backbone | None = None

    @classmethod
    def for_directory(
        cls,
        directory: str | Path,
        kind: str,
        out_path: str | Path,
        n_frames: int = DEFAULT_FRAMES,
        resolution: int = DEFAULT_RESOLUTION,
        backbone: Backbone | None = None,
    ) -> "ExtractionJob":
        directory = Path(directory)
        suffixes = IMAGE_SUFFIXES if kind == "image" else VIDEO_SUFFIXES
        inputs = sorted(
            p for p in directory.iterdir() if p.is_file() and p.suffix.lower() in suffixes
        )
        return cls(
            inputs=inputs,
            kind=kind,
            out_path=Path(out_path),
            n_frames=n_frames,
            resolution=resolution,
            backbone=backbone,
        )

    def run(self, progress=None) -> JobReport:
        if self.n_frames < 1:
            raise ValueError("n_frames must be >= 1")
        backbone = self.backbone or Backbone()
        report = JobReport()
        records: list[EmbeddingRecord] = []
        for path in self.inputs:
            try:
                if self.kind == "image":
                    record = extract_image(path, backbone, self.resolution)
                else:
                    record = extract_video(path, backbone, self.n_frames, self.resolution)
            except MediaError as exc:
                report.errors.append((str(path), str(exc)))
                continue
            records.append(record)
            report.written.append(record.item_id)
            if progress is not None:
                progress(path, record)
        write_mrf1(records, self.out_path)
        return report
