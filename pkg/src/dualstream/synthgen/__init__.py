"""
Synthgen package - Deterministic synthetic action datasets.

This package provides:
- SynthSpec / CueMode: Which stream carries the class signal
- generate: Frame directories plus manifest.json in the videoio layout
- render_clip: One clip in memory
"""

from .generator import (
    DIRECTIONS,
    FRAME_PATTERN,
    PALETTE,
    SHAPES,
    CueMode,
    SynthSpec,
    generate,
    plan_manifest,
    render_clip,
    velocity,
)

__all__ = [
    "CueMode",
    "SynthSpec",
    "generate",
    "plan_manifest",
    "render_clip",
    "velocity",
    "SHAPES",
    "PALETTE",
    "DIRECTIONS",
    "FRAME_PATTERN",
]
