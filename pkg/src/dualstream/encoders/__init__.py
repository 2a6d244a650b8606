"""
Encoders package - The appearance and motion backbones.

This package provides:
- ViTConfig / ViTEncoder: Patch-embedding transformer over the middle RGB frame
- MobileNetV2Config / MobileNetV2Encoder: Inverted-residual network over the flow stack
- count_parameters: Parameter arithmetic from a config alone
"""

from .config import (
    MOBILENETV2_STAGES,
    ConfigMismatch,
    MobileNetV2Config,
    ViTConfig,
    count_mobilenet_parameters,
    count_parameters,
    count_vit_parameters,
    load_encoder_config,
    make_divisible,
)
from .mobilenet import InvertedResidual, MobileNetV2Encoder
from .vit import TransformerBlock, ViTEncoder

__all__ = [
    "ViTConfig",
    "MobileNetV2Config",
    "ConfigMismatch",
    "MOBILENETV2_STAGES",
    "make_divisible",
    "load_encoder_config",
    "count_parameters",
    "count_vit_parameters",
    "count_mobilenet_parameters",
    "ViTEncoder",
    "TransformerBlock",
    "MobileNetV2Encoder",
    "InvertedResidual",
]
