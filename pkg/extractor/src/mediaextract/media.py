"""Media decoding and preprocessing.

Every frame, whether from an image file or a video, ends up as an RGB
float32 array resized to a square resolution with OpenCV bilinear
interpolation (INTER_LINEAR) and scaled to [-1, 1] via x / 127.5 - 1, the
backbone's published preprocessing. Frame selection for videos uses the
floor(j * total / target) rule, which must stay bit-identical to the
retrieval engine's sampler so both sides of the MRF1 contract agree on
temporal coverage.
"""

from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np
from PIL import Image, UnidentifiedImageError

__all__ = [
    "MediaError",
    "sample_frame_indices",
    "preprocess",
    "load_image",
    "load_video_frames",
]

DEFAULT_RESOLUTION = 224

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".tiff", ".webp"}
VIDEO_SUFFIXES = {".mp4", ".avi", ".mov", ".mkv", ".webm", ".mpg", ".mpeg"}


class MediaError(Exception):
    """A single file could not be decoded; batch processing continues."""


def sample_frame_indices(total_frames: int, target: int) -> list[int]:
    """floor(j * total / target) for j = 0..target-1; repeats when short."""
    if total_frames < 1 or target < 1:
        raise ValueError("total_frames and target must be >= 1")
    return [j * total_frames // target for j in range(target)]


def preprocess(rgb: np.ndarray, resolution: int) -> np.ndarray:
    """Resize an RGB uint8 array and scale pixels to [-1, 1] float32."""
    resized = cv2.resize(rgb, (resolution, resolution), interpolation=cv2.INTER_LINEAR)
    return resized.astype(np.float32) / 127.5 - 1.0


def load_image(path: str | Path, resolution: int = DEFAULT_RESOLUTION) -> np.ndarray:
    """Decode one image file into a preprocessed frame."""
    try:
        with Image.open(path) as img:
            rgb = np.asarray(img.convert("RGB"))
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise MediaError(f"{path}: cannot decode image ({exc})") from exc
    return preprocess(rgb, resolution)


def _read_all_frames(path: str | Path) -> list[np.ndarray]:
    capture = cv2.VideoCapture(str(path))
    try:
        if not capture.isOpened():
            raise MediaError(f"{path}: cannot open video")
        frames: list[np.ndarray] = []
        while True:
            ok, frame_bgr = capture.read()
            if not ok:
                break
            frames.append(cv2.cvtColor(frame_bgr, cv2.COLOR_BGR2RGB))
    finally:
        capture.release()
    if not frames:
        raise MediaError(f"{path}: video has no decodable frames")
    return frames


def load_video_frames(
    path: str | Path, target: int, resolution: int = DEFAULT_RESOLUTION
) -> list[np.ndarray]:
    """Decode a video and return exactly ``target`` preprocessed frames.

    An image file passed here counts as a 1-frame source: the sampling rule
    then repeats that frame ``target`` times.
    """
    path = Path(path)
    if path.suffix.lower() in IMAGE_SUFFIXES:
        single = load_image(path, resolution)
        return [single for _ in sample_frame_indices(1, target)]
    raw_frames = _read_all_frames(path)
    indices = sample_frame_indices(len(raw_frames), target)
    processed: dict[int, np.ndarray] = {}
    out = []
    for index in indices:
        if index not in processed:
            processed[index] = preprocess(raw_frames[index], resolution)
        out.append(processed[index])
    return out
