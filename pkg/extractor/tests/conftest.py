import cv2
import numpy as np
import pytest
from PIL import Image

from mediaextract.backbone import Backbone


@pytest.fixture(scope="session")
def backbone():
    # one shared backbone; construction is cheap but not free
    return Backbone()


def _pattern(kind: str, size: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:size, 0:size]
    if kind == "gradient":
        channel = (x * 255 // size).astype(np.uint8)
        img = np.stack([channel, channel.T, 255 - channel], axis=2)
    elif kind == "checker":
        tile = ((x // 16 + y // 16) % 2 * 255).astype(np.uint8)
        img = np.stack([tile, 255 - tile, tile // 2], axis=2)
    elif kind == "rings":
        r = np.sqrt((x - size / 2) ** 2 + (y - size / 2) ** 2)
        ring = ((np.sin(r / 6.0) + 1) * 127).astype(np.uint8)
        img = np.stack([ring, ring // 2, 255 - ring], axis=2)
    else:
        img = rng.integers(0, 256, (size, size, 3), dtype=np.uint8)
    return img


@pytest.fixture(scope="session")
def image_dir(tmp_path_factory):
    """Five decodable images of different content plus one corrupt file."""
    directory = tmp_path_factory.mktemp("images")
    specs = [
        ("gradient", 200), ("checker", 256), ("rings", 180),
        ("noise", 224), ("noise", 160),
    ]
    for i, (kind, size) in enumerate(specs):
        Image.fromarray(_pattern(kind, size, seed=i)).save(directory / f"img{i:02d}.png")
    (directory / "broken.png").write_bytes(b"\x89PNG\r\n\x1a\nnot really a png")
    return directory


def _write_video(path, n_frames: int, size=(96, 72), seed: int = 0) -> None:
    rng = np.random.default_rng(seed)
    base = rng.integers(0, 200, (size[1], size[0], 3), dtype=np.uint8)
    writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"MJPG"), 24.0, size)
    assert writer.isOpened()
    for t in range(n_frames):
        frame = np.roll(base, shift=t * 3, axis=1)
        frame[:, :, 0] = (frame[:, :, 0].astype(int) + t * 5) % 256
        writer.write(frame)
    writer.release()


@pytest.fixture(scope="session")
def video_dir(tmp_path_factory):
    """Three short clips, one shorter than the 16-frame target."""
    directory = tmp_path_factory.mktemp("videos")
    _write_video(directory / "clip-a.avi", n_frames=40, seed=1)
    _write_video(directory / "clip-b.avi", n_frames=24, seed=2)
    _write_video(directory / "clip-short.avi", n_frames=12, seed=3)
    return directory
