"""
Flow package - Farneback optical flow, normalisation, stacking and caching.

This package provides:
- FarnebackParams / estimate_flow: Dense flow between two grayscale frames
- normalize_flow / build_flow_stack / center_stack: The 20-channel motion input
- cache_write / cache_read: The per-clip NPY cache and its recorded flow settings
- extract_flows: Parallel cache population with an excluded-clip list
- write_flow_visualizations: Diagnostic HSV, u/v and quiver images
"""

from .cache import (
    PARAMS_FILENAME,
    CorruptCache,
    StaleCache,
    cache_is_valid,
    cache_path,
    cache_read,
    cache_signature,
    cache_write,
    read_cache_signature,
    write_cache_signature,
)
from .extractor import (
    ClipStatus,
    ExtractionSummary,
    extract_clip,
    extract_flows,
    read_excluded,
)
from .farneback import (
    FarnebackParams,
    FlowError,
    FlowField,
    ImageTooSmall,
    effective_levels,
    endpoint_error,
    estimate_flow,
)
from .stack import (
    CENTER_OFFSET,
    FLOW_CHANNELS,
    FLOW_PAIRS,
    AlreadyCentered,
    FlowStack,
    build_flow_stack,
    center_stack,
    normalize_displacement,
    normalize_flow,
    pair_start_indices,
)
from .visualize import flow_to_hsv, write_flow_visualizations

__all__ = [
    "FarnebackParams",
    "FlowField",
    "FlowError",
    "ImageTooSmall",
    "effective_levels",
    "endpoint_error",
    "estimate_flow",
    "FlowStack",
    "AlreadyCentered",
    "FLOW_PAIRS",
    "FLOW_CHANNELS",
    "CENTER_OFFSET",
    "normalize_displacement",
    "normalize_flow",
    "pair_start_indices",
    "build_flow_stack",
    "center_stack",
    "CorruptCache",
    "cache_path",
    "cache_read",
    "cache_write",
    "cache_is_valid",
    "StaleCache",
    "PARAMS_FILENAME",
    "cache_signature",
    "read_cache_signature",
    "write_cache_signature",
    "ClipStatus",
    "ExtractionSummary",
    "extract_clip",
    "extract_flows",
    "read_excluded",
    "flow_to_hsv",
    "write_flow_visualizations",
]
