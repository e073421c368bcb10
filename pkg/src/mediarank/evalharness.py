"""Retrieval evaluation: confusion counts, the four standard metrics, and the
seen/unseen protocol.

A retrieved item counts as correct when it shares the query's label. The
relevant set for recall is every same-label item in the repository. Per-query
metrics are macro-averaged with equal query weight; 0/0 ratios are defined
as 0 so an empty retrieval degrades a score instead of crashing a run.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, TextIO

from .errors import ArgumentError, ConfigurationError
from .ranking import (
    DEFAULT_DELTA_T,
    RankMethod,
    par_rerank,
    rank_cosine,
    rank_euclidean,
)
from .store import MediaRecord, Repository

__all__ = [
    "ConfusionCounts",
    "MetricValues",
    "MetricReport",
    "Split",
    "confusion_counts",
    "compute_metrics",
    "evaluate",
    "seen_unseen_split",
    "split_queries",
    "format_report_table",
    "write_report_csv",
    "REPORT_CSV_HEADER",
]

REPORT_CSV_HEADER = "method,split,k,accuracy,precision,recall,f1"


class Split(str, enum.Enum):
    SEEN = "seen"
    UNSEEN = "unseen"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ArgumentError("confusion counts must be non-negative")
        if self.total < 1:
            raise ArgumentError("confusion counts must cover at least one item")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricValues:
    accuracy: float
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class MetricReport:
    """One row of the evaluation table: the four metrics plus their context."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    k: int
    method: RankMethod
    split: Split


def confusion_counts(
    retrieved_ids: Iterable[str],
    relevant_ids: Iterable[str],
    universe_size: int,
) -> ConfusionCounts:
    """Set arithmetic over retrieved vs relevant within a universe of items."""
    retrieved = set(retrieved_ids)
    relevant = set(relevant_ids)
    implied = len(retrieved | relevant)
    if universe_size < implied:
        raise ArgumentError(
            f"universe_size {universe_size} is smaller than the {implied} "
            "distinct ids it must contain"
        )
    tp = len(retrieved & relevant)
    fp = len(retrieved - relevant)
    fn = len(relevant - retrieved)
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=universe_size - tp - fp - fn)


def compute_metrics(counts: ConfusionCounts) -> MetricValues:
    """Accuracy, precision, recall and F1 from one confusion table."""
    accuracy = (counts.tp + counts.tn) / counts.total
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if precision + recall > 0.0
        else 0.0
    )
    return MetricValues(accuracy=accuracy, precision=precision, recall=recall, f1=f1)


def _rank(repo: Repository, query, k: int, method: RankMethod, delta_t: float):
    pairs = repo.vector_items()
    if method is RankMethod.EUCLIDEAN:
        return rank_euclidean(query, pairs, k)
    if method is RankMethod.COSINE:
        return rank_cosine(query, pairs, k)
    if method is RankMethod.PAR:
        return par_rerank(query, pairs, k, delta_t)
    raise ArgumentError(f"unknown ranking method {method!r}")


def evaluate(
    repo: Repository,
    queries: Sequence[tuple[MediaRecord, str]],
    k: int,
    method: RankMethod,
    delta_t: float = DEFAULT_DELTA_T,
    split: Split = Split.SEEN,
) -> MetricReport:
    """Run every query through the chosen ranker and macro-average the metrics.

    Each query record passes through the repository's own aggregation and
    transform pipeline before ranking, so queries and index live in the same
    space. Every repository item must carry a label.
    """
    if not queries:
        raise ArgumentError("evaluate needs at least one query")
    labels = repo.labels()
    if len(labels) != len(repo):
        raise ConfigurationError(
            f"repository is not fully labeled ({len(labels)} of {len(repo)} items)"
        )
    universe = len(repo)
    by_label: dict[str, set[str]] = {}
    for item_id, label in labels.items():
        by_label.setdefault(label, set()).add(item_id)

    sums = [0.0, 0.0, 0.0, 0.0]
    for record, label in queries:
        vector = repo.prepare_query_record(record)
        result = _rank(repo, vector, k, method, delta_t)
        relevant = by_label.get(label, set())
        counts = confusion_counts(result.ids(), relevant, universe)
        values = compute_metrics(counts)
        sums[0] += values.accuracy
        sums[1] += values.precision
        sums[2] += values.recall
        sums[3] += values.f1
    n = len(queries)
    return MetricReport(
        accuracy=sums[0] / n,
        precision=sums[1] / n,
        recall=sums[2] / n,
        f1=sums[3] / n,
        k=k,
        method=method,
        split=split,
    )


def seen_unseen_split(
    labels: Mapping[str, str], seen_classes: Iterable[str]
) -> tuple[list[str], list[str]]:
    """Partition item ids by whether their label belongs to the seen classes."""
    seen_set = set(seen_classes)
    if not seen_set:
        raise ArgumentError("seen_classes must be non-empty")
    seen = sorted(i for i, label in labels.items() if label in seen_set)
    unseen = sorted(i for i, label in labels.items() if label not in seen_set)
    return seen, unseen


def split_queries(
    records: Sequence[MediaRecord], query_fraction: float, seed: int
) -> tuple[list[MediaRecord], list[MediaRecord]]:
    """Deterministically split a corpus into (index records, query seeds).

    The query set takes ``query_fraction`` of the corpus (at least one item,
    never all of it), chosen by a seeded shuffle of the id-sorted records.
    """
    if not 0.0 < query_fraction < 1.0:
        raise ArgumentError(f"query_fraction must lie in (0, 1), got {query_fraction}")
    ordered = sorted(records, key=lambda r: r.item_id)
    if len(ordered) < 2:
        raise ArgumentError("need at least 2 records to split")
    shuffled = ordered[:]
    random.Random(seed).shuffle(shuffled)
    n_queries = min(max(1, int(len(ordered) * query_fraction)), len(ordered) - 1)
    query_ids = {r.item_id for r in shuffled[:n_queries]}
    index_records = [r for r in ordered if r.item_id not in query_ids]
    query_records = [r for r in ordered if r.item_id in query_ids]
    return index_records, query_records


def format_report_table(reports: Sequence[MetricReport]) -> str:
    """Fixed-width text table, one row per method x split x k."""
    header = f"{'method':<10} {'split':<7} {'k':>4} {'accuracy':>9} {'precision':>10} {'recall':>8} {'f1':>8}"
    lines = [header, "-" * len(header)]
    for rep in reports:
        lines.append(
            f"{rep.method.value:<10} {rep.split.value:<7} {rep.k:>4} "
            f"{rep.accuracy:>9.4f} {rep.precision:>10.4f} {rep.recall:>8.4f} {rep.f1:>8.4f}"
        )
    return "\n".join(lines)


def write_report_csv(reports: Sequence[MetricReport], out: TextIO) -> None:
    out.write(REPORT_CSV_HEADER + "\n")
    for rep in reports:
        out.write(
            f"{rep.method.value},{rep.split.value},{rep.k},"
            f"{rep.accuracy:.6f},{rep.precision:.6f},{rep.recall:.6f},{rep.f1:.6f}\n"
        )
