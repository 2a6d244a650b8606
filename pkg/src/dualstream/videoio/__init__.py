"""
Video I/O package - Clip ingestion, uniform sampling and dataset manifests.

This package provides:
- Clip / SampledClip: Decoded frames and the N uniformly sampled frames
- ingest_clip: Read a directory of numbered frames
- sample_uniform: Uniform temporal sampling plus bilinear resize
- DatasetManifest / ClipRecord: The clip list with class and split assignment
"""

from .clip import (
    Clip,
    DimensionMismatch,
    MissingFrames,
    SampledClip,
    TooFewFrames,
    VideoIOError,
    ingest_clip,
    resize_frame,
    round_uniform,
    sample_uniform,
    to_gray,
    uniform_indices,
    write_frame,
)
from .manifest import MANIFEST_FILENAME, SPLITS, ClipRecord, DatasetManifest, scan_layout

__all__ = [
    "Clip",
    "SampledClip",
    "VideoIOError",
    "MissingFrames",
    "DimensionMismatch",
    "TooFewFrames",
    "ingest_clip",
    "sample_uniform",
    "resize_frame",
    "round_uniform",
    "to_gray",
    "uniform_indices",
    "write_frame",
    "ClipRecord",
    "DatasetManifest",
    "scan_layout",
    "MANIFEST_FILENAME",
    "SPLITS",
]
