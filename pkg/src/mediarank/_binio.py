"""Low-level helpers for the little-endian binary file formats.

Payload floats are stored as 32-bit little-endian; readers promote to 64-bit
for computation. Writers go through a temp file plus atomic rename.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path
from typing import BinaryIO, Callable

import numpy as np

from .errors import FormatError


class Reader:
    """Sequential reader that turns short reads into FormatError."""

    def __init__(self, fh: BinaryIO, path: str):
        self._fh = fh
        self._path = path

    def bytes(self, n: int, what: str) -> bytes:
        data = self._fh.read(n)
        if len(data) != n:
            raise FormatError(f"{self._path}: truncated while reading {what}")
        return data

    def u8(self, what: str) -> int:
        return self.bytes(1, what)[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.bytes(4, what))[0]

    def u64(self, what: str) -> int:
        return struct.unpack("<Q", self.bytes(8, what))[0]

    def f32_array(self, count: int, what: str) -> np.ndarray:
        raw = self.bytes(4 * count, what)
        return np.frombuffer(raw, dtype="<f4").astype(np.float64)

    def utf8(self, length: int, what: str) -> str:
        raw = self.bytes(length, what)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{self._path}: invalid UTF-8 in {what}") from exc

    def expect_magic(self, magic: bytes, format_name: str) -> None:
        got = self._fh.read(len(magic))
        if got != magic:
            raise FormatError(
                f"{self._path}: bad magic {got!r}, expected {magic!r} ({format_name} file)"
            )

    def expect_version(self, supported: int, format_name: str) -> int:
        version = self.u32("version")
        if version != supported:
            raise FormatError(
                f"{self._path}: unsupported {format_name} version {version}, "
                f"this build reads version {supported}"
            )
        return version

    def expect_eof(self) -> None:
        if self._fh.read(1):
            raise FormatError(f"{self._path}: trailing bytes after payload")


class Writer:
    def __init__(self, fh: BinaryIO):
        self._fh = fh

    def bytes(self, data: bytes) -> None:
        self._fh.write(data)

    def u8(self, value: int) -> None:
        self._fh.write(struct.pack("<B", value))

    def u32(self, value: int) -> None:
        self._fh.write(struct.pack("<I", value))

    def u64(self, value: int) -> None:
        self._fh.write(struct.pack("<Q", value))

    def f32_array(self, arr: np.ndarray) -> None:
        self._fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())

    def utf8(self, text: str) -> bytes:
        raw = text.encode("utf-8")
        self._fh.write(raw)
        return raw


def atomic_write(path: str | Path, write_body: Callable[[Writer], None]) -> None:
    """Write a file atomically: temp file in the target directory, then rename."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp_name = tempfile.mkstemp(dir=directory, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            write_body(Writer(fh))
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def open_reader(path: str | Path) -> tuple[BinaryIO, Reader]:
    path = Path(path)
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise FormatError(f"{path}: cannot open ({exc.strerror})") from exc
    return fh, Reader(fh, str(path))
