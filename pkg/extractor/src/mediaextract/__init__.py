"""Batch feature extraction from images and videos into MRF1 embedding files."""

from .backbone import Backbone, OUTPUT_DIM
from .extract import ExtractionJob, JobReport, extract_image, extract_video
from .media import MediaError, sample_frame_indices
from .mrf1 import EmbeddingRecord, write_mrf1

__version__ = "0.1.0"

__all__ = [
    "Backbone",
    "OUTPUT_DIM",
    "ExtractionJob",
    "JobReport",
    "extract_image",
    "extract_video",
    "MediaError",
    "sample_frame_indices",
    "EmbeddingRecord",
    "write_mrf1",
    "__version__",
]
