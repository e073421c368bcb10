"""Query-time ranking: plain euclidean, plain cosine, and proximal affinity re-ranking.

Proximal affinity re-ranking (PAR) extracts the euclidean top-k short-list,
then keeps only entries whose cosine similarity to the query strictly exceeds
a threshold delta_t, preserving the euclidean order. Distance ties break by
item id ascending so results are reproducible.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ArgumentError, DimensionError, EmptyRepositoryError, ZeroVectorError
from .vectors import FeatureVector

__all__ = [
    "RankMethod",
    "RankedEntry",
    "RankedResult",
    "DEFAULT_DELTA_T",
    "rank_euclidean",
    "rank_cosine",
    "par_rerank",
]

# Starting point only; the filtering threshold is meant to be tuned per corpus.
DEFAULT_DELTA_T = 0.5


class RankMethod(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    COSINE = "cosine"
    PAR = "par"


@dataclass(frozen=True)
class RankedEntry:
    item_id: str
    distance: float
    cosine: float


@dataclass(frozen=True)
class RankedResult:
    """Ordered ranking output.

    Entries are ascending by distance for euclidean/PAR and descending by
    cosine for the cosine method; ``delta_t`` is set only for PAR.
    """

    entries: tuple[RankedEntry, ...]
    method: RankMethod
    k_requested: int
    delta_t: float | None = None

    def ids(self) -> tuple[str, ...]:
        return tuple(e.item_id for e in self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def _prepare(
    query: FeatureVector,
    repo_vectors: Sequence[tuple[str, FeatureVector]],
    k: int,
) -> tuple[np.ndarray, list[str], np.ndarray]:
    """Validate inputs and stack the repository into one matrix."""
    if k < 1:
        raise ArgumentError(f"k must be >= 1, got {k}")
    if len(repo_vectors) == 0:
        raise EmptyRepositoryError("cannot rank against an empty repository")
    ids = []
    rows = []
    for item_id, vec in repo_vectors:
        if vec.dim != query.dim:
            raise DimensionError(
                f"repository item {item_id!r} has dim {vec.dim}, query has dim {query.dim}"
            )
        ids.append(item_id)
        rows.append(vec.values)
    return np.stack(rows), ids, query.values


def _cosines(query: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Cosine of the query against each matrix row; zero-norm rows map to 0."""
    q_norm = float(np.linalg.norm(query))
    if q_norm == 0.0:
        raise ZeroVectorError("cosine similarity is undefined for a zero-norm query")
    row_norms = np.linalg.norm(matrix, axis=1)
    dots = matrix @ query
    with np.errstate(divide="ignore", invalid="ignore"):
        cos = np.where(row_norms > 0.0, dots / (row_norms * q_norm), 0.0)
    return np.clip(cos, -1.0, 1.0)


def rank_euclidean(
    query: FeatureVector,
    repo_vectors: Sequence[tuple[str, FeatureVector]],
    k: int,
) -> RankedResult:
    """Top-k repository items by ascending euclidean distance to the query.

    Selection uses a bounded heap (O(n log k), never a full sort). Each entry
    also carries its cosine similarity, computed once and reused by PAR.
    """
    matrix, ids, q = _prepare(query, repo_vectors, k)
    diffs = matrix - q
    dists = np.sqrt(np.einsum("ij,ij->i", diffs, diffs))
    picked = heapq.nsmallest(
        k, range(len(ids)), key=lambda i: (float(dists[i]), ids[i])
    )
    sub_cos = _cosines(q, matrix[picked])
    entries = tuple(
        RankedEntry(ids[i], float(dists[i]), float(c)) for i, c in zip(picked, sub_cos)
    )
    return RankedResult(entries=entries, method=RankMethod.EUCLIDEAN, k_requested=k)


def rank_cosine(
    query: FeatureVector,
    repo_vectors: Sequence[tuple[str, FeatureVector]],
    k: int,
) -> RankedResult:
    """Top-k repository items by descending cosine similarity, ties by id ascending."""
    matrix, ids, q = _prepare(query, repo_vectors, k)
    cos = _cosines(q, matrix)
    picked = heapq.nsmallest(
        k, range(len(ids)), key=lambda i: (-float(cos[i]), ids[i])
    )
    diffs = matrix[picked] - q
    sub_dists = np.sqrt(np.einsum("ij,ij->i", diffs, diffs))
    entries = tuple(
        RankedEntry(ids[i], float(d), float(cos[i])) for i, d in zip(picked, sub_dists)
    )
    return RankedResult(entries=entries, method=RankMethod.COSINE, k_requested=k)


def par_rerank(
    query: FeatureVector,
    repo_vectors: Sequence[tuple[str, FeatureVector]],
    k: int,
    delta_t: float = DEFAULT_DELTA_T,
) -> RankedResult:
    """Euclidean top-k short-list filtered to entries with cosine strictly above delta_t.

    The inequality is strict, so delta_t = 1 always yields an empty result and
    an exactly antiparallel item (clamped cosine -1) is dropped even at
    delta_t = -1. The surviving entries keep their euclidean order; the result
    may be empty.
    """
    if not -1.0 <= delta_t <= 1.0:
        raise ArgumentError(f"delta_t must lie in [-1, 1], got {delta_t}")
    shortlist = rank_euclidean(query, repo_vectors, k)
    entries = tuple(e for e in shortlist.entries if e.cosine > delta_t)
    return RankedResult(
        entries=entries, method=RankMethod.PAR, k_requested=k, delta_t=delta_t
    )
