"""
Fusion package - Projection, the five fusion heads and the full classifiers.

This package provides:
- Projection: Motion feature -> shared fusion space
- LateFusion / ConcatFusion / AttentionFusion / WeightedFusion / GatedFusion
- DualStreamModel / SingleStreamModel / build_model: The seven suite configurations
- run_gradchecks: Finite-difference verification of heads, projection and encoder blocks
"""

from .checks import component_checks, run_gradchecks
from .heads import (
    ATTENTION_HEADS,
    CONCAT_DROPOUT,
    AttentionFusion,
    ConcatFusion,
    FusionHead,
    FusionKind,
    GatedFusion,
    HeadsMismatch,
    LateFusion,
    WeightedFusion,
    build_head,
)
from .model import (
    SUITE_KINDS,
    Classifier,
    DualStreamModel,
    ModelKind,
    SingleStreamModel,
    build_model,
)
from .projection import PROJECTION_DROPOUT, Projection

__all__ = [
    "run_gradchecks",
    "component_checks",
    "Projection",
    "PROJECTION_DROPOUT",
    "FusionKind",
    "FusionHead",
    "HeadsMismatch",
    "LateFusion",
    "ConcatFusion",
    "AttentionFusion",
    "WeightedFusion",
    "GatedFusion",
    "build_head",
    "ATTENTION_HEADS",
    "CONCAT_DROPOUT",
    "ModelKind",
    "SUITE_KINDS",
    "Classifier",
    "DualStreamModel",
    "SingleStreamModel",
    "build_model",
]
