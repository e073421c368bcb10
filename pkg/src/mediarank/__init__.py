"""Content-based visual media retrieval engine.

Indexes fixed-dimension embeddings for images and frame sequences for
videos, aggregates frame sequences into single video representations, and
answers query-by-example searches ranked by euclidean distance, cosine
similarity, or proximal affinity re-ranking, with optional PCA compression,
a persistent binary store, an evaluation harness, an HTTP query service and
a CLI.
"""

from .errors import (
    ArgumentError,
    ConfigurationError,
    DegenerateDataError,
    DimensionError,
    DuplicateIdError,
    EmptyRepositoryError,
    FormatError,
    InsufficientDataError,
    MediaRankError,
    ZeroVectorError,
)
from .ranking import (
    DEFAULT_DELTA_T,
    RankedEntry,
    RankedResult,
    RankMethod,
    par_rerank,
    rank_cosine,
    rank_euclidean,
)
from .reduce import PcaModel, load_pca_model, pca_fit, pca_transform, save_pca_model
from .store import (
    MediaKind,
    MediaRecord,
    Repository,
    build_index,
    load_index,
    read_embeddings,
    read_labels,
    save_index,
    write_embeddings,
    write_labels,
)
from .temporal import (
    AggregationKind,
    AggregationStrategy,
    FrameFeatureSequence,
    LstmWeights,
    aggregate,
    load_lstm_weights,
    lstm_forward,
    sample_frame_indices,
    save_lstm_weights,
    segment_chunks,
)
from .vectors import FeatureVector, cosine_similarity, euclidean_distance, l2_norm

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "ConfigurationError",
    "DegenerateDataError",
    "DimensionError",
    "DuplicateIdError",
    "EmptyRepositoryError",
    "FormatError",
    "InsufficientDataError",
    "MediaRankError",
    "ZeroVectorError",
    "DEFAULT_DELTA_T",
    "RankedEntry",
    "RankedResult",
    "RankMethod",
    "par_rerank",
    "rank_cosine",
    "rank_euclidean",
    "PcaModel",
    "load_pca_model",
    "pca_fit",
    "pca_transform",
    "save_pca_model",
    "MediaKind",
    "MediaRecord",
    "Repository",
    "build_index",
    "load_index",
    "read_embeddings",
    "read_labels",
    "save_index",
    "write_embeddings",
    "write_labels",
    "AggregationKind",
    "AggregationStrategy",
    "FrameFeatureSequence",
    "LstmWeights",
    "aggregate",
    "load_lstm_weights",
    "lstm_forward",
    "sample_frame_indices",
    "save_lstm_weights",
    "segment_chunks",
    "FeatureVector",
    "cosine_similarity",
    "euclidean_distance",
    "l2_norm",
    "__version__",
]
