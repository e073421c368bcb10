"""Embedding ingestion, index construction, and persistence.

Two binary formats live here. MRF1 holds raw per-frame embeddings:

    magic "MRF1", u32 version (=1), u32 dim, u8 kind-default,
    u64 record count, then per record: u32 id byte-length, UTF-8 id bytes,
    u8 kind (0=image, 1=video), u32 frame count, frames*dim f32 LE floats.

MRIX holds a built index:

    magic "MRIX", u32 version (=1), u32 dim, u8 normalized flag,
    u8 aggregation kind, u8 lstm-weights presence (+ embedded MRLW block),
    u8 pca presence (+ embedded MRPC block), u64 item count, then per item:
    u32 id byte-length, id bytes, u8 kind, dim f32 LE floats.

Payloads are 32-bit floats; computation promotes to 64-bit. Items are
written sorted by id so identical repositories serialize to identical bytes
regardless of insertion order. Labels never enter the binary formats; they
live in a sidecar manifest of ``item_id<TAB>label`` lines.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._binio import atomic_write, open_reader
from .errors import (
    DimensionError,
    DuplicateIdError,
    EmptyRepositoryError,
    FormatError,
)
from .reduce import PcaModel, _read_pca_block, _write_pca_body, pca_fit, pca_transform
from .temporal import (
    AggregationKind,
    AggregationStrategy,
    FrameFeatureSequence,
    LstmWeights,
    _MRLW_MAGIC,
    _MRLW_VERSION,
    _read_lstm_arrays,
    aggregate,
)
from .vectors import FeatureVector, l2_norm

__all__ = [
    "MediaKind",
    "MediaRecord",
    "StoredItem",
    "Repository",
    "read_embeddings",
    "write_embeddings",
    "read_labels",
    "write_labels",
    "build_index",
    "save_index",
    "load_index",
]

_MRF1_MAGIC = b"MRF1"
_MRF1_VERSION = 1
_MRIX_MAGIC = b"MRIX"
_MRIX_VERSION = 1


class MediaKind(enum.Enum):
    IMAGE = 0
    VIDEO = 1


@dataclass(frozen=True, eq=False)
class MediaRecord:
    """One indexed item: id, media kind, per-frame embeddings, optional label."""

    item_id: str
    kind: MediaKind
    frames: FrameFeatureSequence
    label: str | None = None

    def __post_init__(self) -> None:
        if not self.item_id:
            raise ValueError("item_id must be a non-empty string")
        if self.kind is MediaKind.IMAGE and self.frames.n_frames != 1:
            raise ValueError(
                f"image record {self.item_id!r} must have exactly 1 frame, "
                f"got {self.frames.n_frames}"
            )

    @property
    def dim(self) -> int:
        return self.frames.dim

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MediaRecord):
            return NotImplemented
        return (
            self.item_id == other.item_id
            and self.kind is other.kind
            and self.label == other.label
            and self.frames == other.frames
        )


@dataclass(frozen=True)
class StoredItem:
    vector: FeatureVector
    kind: MediaKind
    label: str | None = None


class Repository:
    """Indexed collection of aggregated vectors keyed by item id.

    Many readers may query a repository concurrently; ``add_item`` needs
    exclusive access (single-writer contract).
    """

    def __init__(
        self,
        dim: int,
        aggregation: AggregationStrategy,
        pca: PcaModel | None = None,
        normalized: bool = False,
    ):
        if dim < 1:
            raise DimensionError(f"repository dim must be >= 1, got {dim}")
        if pca is not None and pca.output_dim != dim:
            raise DimensionError(
                f"repository dim {dim} must equal PCA output_dim {pca.output_dim}"
            )
        self.dim = dim
        self.aggregation = aggregation
        self.pca = pca
        self.normalized = normalized
        self._items: dict[str, StoredItem] = {}

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._items

    def ids(self) -> list[str]:
        return sorted(self._items)

    def get(self, item_id: str) -> StoredItem | None:
        return self._items.get(item_id)

    def items(self) -> list[tuple[str, StoredItem]]:
        return sorted(self._items.items())

    def vector_items(self) -> list[tuple[str, FeatureVector]]:
        """(id, vector) pairs in id order, the shape the rankers consume."""
        return [(item_id, item.vector) for item_id, item in self.items()]

    def labels(self) -> dict[str, str]:
        return {
            item_id: item.label
            for item_id, item in self._items.items()
            if item.label is not None
        }

    def set_labels(self, labels: Mapping[str, str]) -> None:
        """Attach labels from a manifest; ids absent from the index are ignored."""
        for item_id, label in labels.items():
            item = self._items.get(item_id)
            if item is not None:
                self._items[item_id] = StoredItem(item.vector, item.kind, label)

    def prepare_query_record(self, record: MediaRecord) -> FeatureVector:
        """Run a raw record through the index's aggregation + transform pipeline."""
        return self._transform(aggregate(record.frames, self.aggregation))

    def prepare_query_vector(self, vector: FeatureVector) -> FeatureVector:
        """Transform an already-aggregated vector into the stored space."""
        if self.pca is not None:
            if vector.dim != self.pca.input_dim:
                raise DimensionError(
                    f"query dim {vector.dim} does not match expected input dim "
                    f"{self.pca.input_dim}"
                )
        elif vector.dim != self.dim:
            raise DimensionError(
                f"query dim {vector.dim} does not match repository dim {self.dim}"
            )
        return self._transform(vector)

    def _transform(self, vector: FeatureVector) -> FeatureVector:
        if self.pca is not None:
            vector = pca_transform(self.pca, vector)
        if self.normalized:
            norm = l2_norm(vector)
            if norm > 0.0:
                vector = FeatureVector(vector.values / norm)
        return vector

    def _insert(self, item_id: str, item: StoredItem) -> None:
        if item_id in self._items:
            raise DuplicateIdError(f"duplicate item_id {item_id!r}")
        if item.vector.dim != self.dim:
            raise DimensionError(
                f"item {item_id!r} has dim {item.vector.dim}, repository dim is {self.dim}"
            )
        self._items[item_id] = item

    def add_item(self, record: MediaRecord) -> None:
        """Aggregate, transform and store one record; duplicate ids leave the
        repository unchanged."""
        if record.item_id in self._items:
            raise DuplicateIdError(f"duplicate item_id {record.item_id!r}")
        vector = self.prepare_query_record(record)
        self._insert(record.item_id, StoredItem(vector, record.kind, record.label))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Repository):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.normalized == other.normalized
            and self.aggregation.kind is other.aggregation.kind
            and self._items == other._items
        )


def add_item(repo: Repository, record: MediaRecord) -> None:
    repo.add_item(record)


def write_embeddings(records: Sequence[MediaRecord], path: str | Path) -> None:
    """Write records to an MRF1 file; ids must be unique and dims shared."""
    dims = {r.dim for r in records}
    if len(dims) > 1:
        raise DimensionError(f"records mix dimensions {sorted(dims)}")
    seen: set[str] = set()
    for record in records:
        if record.item_id in seen:
            raise DuplicateIdError(f"duplicate item_id {record.item_id!r}")
        seen.add(record.item_id)
    dim = dims.pop() if dims else 0
    n_videos = sum(1 for r in records if r.kind is MediaKind.VIDEO)
    default_kind = MediaKind.VIDEO if n_videos * 2 > len(records) else MediaKind.IMAGE

    def body(w):
        w.bytes(_MRF1_MAGIC)
        w.u32(_MRF1_VERSION)
        w.u32(dim)
        w.u8(default_kind.value)
        w.u64(len(records))
        for record in records:
            id_bytes = record.item_id.encode("utf-8")
            w.u32(len(id_bytes))
            w.bytes(id_bytes)
            w.u8(record.kind.value)
            w.u32(record.frames.n_frames)
            w.f32_array(record.frames.frames)

    atomic_write(path, body)


def read_embeddings(path: str | Path) -> list[MediaRecord]:
    """Read an MRF1 file back into records, bit-exact with what was written."""
    fh, r = open_reader(path)
    with fh:
        r.expect_magic(_MRF1_MAGIC, "MRF1")
        r.expect_version(_MRF1_VERSION, "MRF1")
        dim = r.u32("dim")
        kind_default = r.u8("kind-default")
        if kind_default not in (0, 1):
            raise FormatError(f"{path}: invalid kind-default byte {kind_default}")
        count = r.u64("record count")
        if count > 0 and dim < 1:
            raise FormatError(f"{path}: non-positive dim {dim} with {count} records")
        records: list[MediaRecord] = []
        seen: set[str] = set()
        for index in range(count):
            what = f"record {index}"
            id_len = r.u32(f"{what} id length")
            item_id = r.utf8(id_len, f"{what} id")
            if not item_id:
                raise FormatError(f"{path}: empty id in {what}")
            if item_id in seen:
                raise DuplicateIdError(f"{path}: duplicate item_id {item_id!r}")
            seen.add(item_id)
            kind_byte = r.u8(f"{what} kind")
            if kind_byte not in (0, 1):
                raise FormatError(f"{path}: invalid kind byte {kind_byte} in {what}")
            kind = MediaKind(kind_byte)
            n_frames = r.u32(f"{what} frame count")
            if n_frames < 1:
                raise FormatError(f"{path}: zero frames in {what}")
            if kind is MediaKind.IMAGE and n_frames != 1:
                raise FormatError(
                    f"{path}: image {what} declares {n_frames} frames"
                )
            flat = r.f32_array(n_frames * dim, f"{what} frames")
            records.append(
                MediaRecord(
                    item_id=item_id,
                    kind=kind,
                    frames=FrameFeatureSequence(flat.reshape(n_frames, dim)),
                )
            )
        r.expect_eof()
    return records


def write_labels(labels: Mapping[str, str], path: str | Path) -> None:
    """Write the sidecar manifest: one ``item_id<TAB>label`` line per item."""
    lines = [f"{item_id}\t{label}\n" for item_id, label in sorted(labels.items())]
    Path(path).write_text("".join(lines), encoding="utf-8")


def read_labels(path: str | Path) -> dict[str, str]:
    labels: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        item_id, sep, label = line.partition("\t")
        if not sep or not item_id or not label:
            raise FormatError(f"{path}:{lineno}: expected 'item_id<TAB>label'")
        labels[item_id] = label
    return labels


def build_index(
    records: Iterable[MediaRecord],
    aggregation: AggregationStrategy,
    pca: PcaModel | None = None,
    pca_fit_variance: float | None = None,
    normalize: bool = False,
) -> Repository:
    """Aggregate every record, optionally PCA-compress, optionally L2-normalize.

    ``pca`` supplies a prefit model; ``pca_fit_variance`` instead fits one on
    this corpus's aggregated vectors (the fitted model ships inside the saved
    index so queries are transformed identically). The result is independent
    of record order.
    """
    records = list(records)
    if not records:
        raise EmptyRepositoryError("cannot build an index from zero records")
    if pca is not None and pca_fit_variance is not None:
        raise ValueError("pass either a prefit pca model or pca_fit_variance, not both")
    dims = {r.dim for r in records}
    if len(dims) > 1:
        raise DimensionError(f"records mix dimensions {sorted(dims)}")

    aggregated: list[tuple[MediaRecord, FeatureVector]] = [
        (record, aggregate(record.frames, aggregation)) for record in records
    ]
    if pca_fit_variance is not None:
        # Fit order-independently on the id-sorted aggregated matrix.
        ordered = sorted(aggregated, key=lambda pair: pair[0].item_id)
        pca = pca_fit(
            np.stack([vec.values for _, vec in ordered]), pca_fit_variance
        )
    out_dim = pca.output_dim if pca is not None else aggregation.output_dim(dims.pop())
    repo = Repository(dim=out_dim, aggregation=aggregation, pca=pca, normalized=normalize)
    for record, vector in aggregated:
        stored = repo._transform(vector)
        repo._insert(record.item_id, StoredItem(stored, record.kind, record.label))
    return repo


def save_index(repo: Repository, path: str | Path) -> None:
    """Write an MRIX file; items go out sorted by id, vectors as f32."""

    def body(w):
        w.bytes(_MRIX_MAGIC)
        w.u32(_MRIX_VERSION)
        w.u32(repo.dim)
        w.u8(1 if repo.normalized else 0)
        w.u8(repo.aggregation.kind.value)
        weights = repo.aggregation.weights
        w.u8(1 if weights is not None else 0)
        if weights is not None:
            w.bytes(_MRLW_MAGIC)
            w.u32(_MRLW_VERSION)
            w.u32(weights.input_dim)
            w.u32(weights.units)
            for arr in weights.arrays():
                w.f32_array(arr)
        w.u8(1 if repo.pca is not None else 0)
        if repo.pca is not None:
            _write_pca_body(w, repo.pca)
        w.u64(len(repo))
        for item_id, item in repo.items():
            id_bytes = item_id.encode("utf-8")
            w.u32(len(id_bytes))
            w.bytes(id_bytes)
            w.u8(item.kind.value)
            w.f32_array(item.vector.values)

    atomic_write(path, body)


def load_index(path: str | Path) -> Repository:
    fh, r = open_reader(path)
    with fh:
        r.expect_magic(_MRIX_MAGIC, "MRIX")
        r.expect_version(_MRIX_VERSION, "MRIX")
        dim = r.u32("dim")
        if dim < 1:
            raise FormatError(f"{path}: non-positive dim {dim}")
        normalized = r.u8("normalized flag")
        if normalized not in (0, 1):
            raise FormatError(f"{path}: invalid normalized flag {normalized}")
        kind_byte = r.u8("aggregation kind")
        try:
            agg_kind = AggregationKind(kind_byte)
        except ValueError:
            raise FormatError(
                f"{path}: unknown aggregation kind byte {kind_byte}"
            ) from None
        weights: LstmWeights | None = None
        has_weights = r.u8("lstm presence flag")
        if has_weights not in (0, 1):
            raise FormatError(f"{path}: invalid lstm presence flag {has_weights}")
        if has_weights:
            r.expect_magic(_MRLW_MAGIC, "embedded MRLW")
            r.expect_version(_MRLW_VERSION, "embedded MRLW")
            d = r.u32("lstm input_dim")
            h = r.u32("lstm units")
            if d < 1 or h < 1:
                raise FormatError(f"{path}: invalid embedded MRLW dims ({d}, {h})")
            weights = _read_lstm_arrays(r, d, h)
        if (agg_kind is AggregationKind.LSTM_FINAL_HIDDEN) != bool(has_weights):
            raise FormatError(
                f"{path}: aggregation kind {agg_kind.cli_name!r} inconsistent with "
                f"lstm presence flag {has_weights}"
            )
        pca: PcaModel | None = None
        has_pca = r.u8("pca presence flag")
        if has_pca not in (0, 1):
            raise FormatError(f"{path}: invalid pca presence flag {has_pca}")
        if has_pca:
            pca = _read_pca_block(r, path)
            if pca.output_dim != dim:
                raise FormatError(
                    f"{path}: index dim {dim} does not match embedded PCA "
                    f"output_dim {pca.output_dim}"
                )
        aggregation = AggregationStrategy(kind=agg_kind, weights=weights)
        repo = Repository(
            dim=dim, aggregation=aggregation, pca=pca, normalized=bool(normalized)
        )
        count = r.u64("item count")
        for index in range(count):
            what = f"item {index}"
            id_len = r.u32(f"{what} id length")
            item_id = r.utf8(id_len, f"{what} id")
            if not item_id:
                raise FormatError(f"{path}: empty id in {what}")
            kind_val = r.u8(f"{what} kind")
            if kind_val not in (0, 1):
                raise FormatError(f"{path}: invalid kind byte {kind_val} in {what}")
            values = r.f32_array(dim, f"{what} vector")
            try:
                repo._insert(
                    item_id, StoredItem(FeatureVector(values), MediaKind(kind_val))
                )
            except DuplicateIdError:
                raise DuplicateIdError(f"{path}: duplicate item_id {item_id!r}") from None
        r.expect_eof()
    return repo
