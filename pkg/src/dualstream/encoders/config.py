"""
Encoder architecture configs and parameter arithmetic.

Both configs load from YAML or JSON files (``configs/paper_vit_tiny.json``,
``configs/paper_mobilenetv2_flow.json`` and the desk-scale variants) and fully
determine their architecture.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from dualstream.core.schema import ConfigError, dataclass_from_dict
from dualstream.core.utils import DualStreamError

# (expansion t, output channels c, repeats n, first stride s)
MOBILENETV2_STAGES: tuple[tuple[int, int, int, int], ...] = (
    (1, 16, 1, 1),
    (6, 24, 2, 2),
    (6, 32, 3, 2),
    (6, 64, 4, 2),
    (6, 96, 3, 1),
    (6, 160, 3, 2),
    (6, 320, 1, 1),
)


class ConfigMismatch(DualStreamError):
    """Raised when an encoder input does not match its architecture config."""

    pass


def make_divisible(value: float, divisor: int = 8) -> int:
    """Round a channel count to a multiple of divisor without losing more than 10%."""
    rounded = max(divisor, int(value + divisor / 2) // divisor * divisor)
    if rounded < 0.9 * value:
        rounded += divisor
    return rounded


@dataclass
class ViTConfig:
    """Patch-embedding transformer (ViT-Tiny by default)."""

    image_size: int = 224
    patch_size: int = 16
    in_channels: int = 3
    embed_dim: int = 192
    depth: int = 12
    heads: int = 3
    mlp_ratio: float = 4.0
    ln_eps: float = 1e-6

    def __post_init__(self) -> None:
        if min(self.image_size, self.patch_size, self.embed_dim, self.depth, self.heads) < 1:
            raise ValueError("ViT dimensions must be positive")
        if self.image_size % self.patch_size:
            raise ValueError(
                f"image_size {self.image_size} is not divisible by patch_size {self.patch_size}"
            )
        if self.embed_dim % self.heads:
            raise ValueError(f"embed_dim {self.embed_dim} is not divisible by heads {self.heads}")

    @property
    def num_patches(self) -> int:
        return (self.image_size // self.patch_size) ** 2

    @property
    def sequence_length(self) -> int:
        return self.num_patches + 1

    @property
    def patch_dim(self) -> int:
        return self.in_channels * self.patch_size**2

    @property
    def mlp_hidden(self) -> int:
        return int(self.embed_dim * self.mlp_ratio)

    @property
    def output_dim(self) -> int:
        return self.embed_dim

    @classmethod
    def from_dict(cls, data: dict[str, Any] | None) -> "ViTConfig":
        return dataclass_from_dict(cls, data, "vit")


@dataclass
class MobileNetV2Config:
    """Inverted-residual motion encoder with a 20-channel stem."""

    in_channels: int = 20
    input_size: int = 224
    width_multiplier: float = 1.0
    stem_channels: int = 32
    last_channels: int = 1280
    scale_head: bool = False
    stages: tuple[tuple[int, int, int, int], ...] = MOBILENETV2_STAGES
    bn_momentum: float = 0.1
    bn_eps: float = 1e-5
    round_nearest: int = 8

    def __post_init__(self) -> None:
        stages = tuple(tuple(int(x) for x in stage) for stage in self.stages)
        self.stages = stages  # type: ignore[assignment]
        if any(len(stage) != 4 for stage in self.stages):
            raise ValueError("Each stage must be (expansion, channels, repeats, stride)")
        if any(stage[3] not in (1, 2) for stage in self.stages):
            raise ValueError("Stage strides must be 1 or 2")
        if self.width_multiplier <= 0:
            raise ValueError(f"width_multiplier must be positive, got {self.width_multiplier}")
        if self.in_channels < 1 or self.input_size < 1:
            raise ValueError("in_channels and input_size must be positive")

    def channels(self, base: int) -> int:
        return make_divisible(base * self.width_multiplier, self.round_nearest)

    @property
    def stem_width(self) -> int:
        return self.channels(self.stem_channels)

    @property
    def final_dim(self) -> int:
        factor = self.width_multiplier if self.scale_head else max(1.0, self.width_multiplier)
        return make_divisible(self.last_channels * factor, self.round_nearest)

    @property
    def output_dim(self) -> int:
        return self.final_dim

    @classmethod
    def from_dict(cls, data: dict[str, Any] | None) -> "MobileNetV2Config":
        return dataclass_from_dict(cls, data, "mobilenet")


def load_encoder_config(path: Path | str, kind: str) -> ViTConfig | MobileNetV2Config:
    """
    Load an encoder config file.

    Args:
        path: YAML or JSON file.
        kind: "vit" or "mobilenet".

    Raises:
        ConfigError: On unreadable files, unknown kinds or invalid values.
    """
    source = Path(path)
    try:
        with open(source, encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except (yaml.YAMLError, OSError) as e:
        raise ConfigError(f"Failed to load encoder config {source}: {e}") from e
    if kind == "vit":
        return ViTConfig.from_dict(data)
    if kind == "mobilenet":
        return MobileNetV2Config.from_dict(data)
    raise ConfigError(f"Unknown encoder kind '{kind}'")


def _linear(fan_in: int, fan_out: int, bias: bool = True) -> int:
    return fan_in * fan_out + (fan_out if bias else 0)


def count_vit_parameters(cfg: ViTConfig) -> int:
    """Trainable parameters of the transformer backbone, from the config alone."""
    d = cfg.embed_dim
    embed = _linear(cfg.patch_dim, d) + d + cfg.sequence_length * d
    attention = _linear(d, 3 * d) + _linear(d, d)
    mlp = _linear(d, cfg.mlp_hidden) + _linear(cfg.mlp_hidden, d)
    block = 2 * (2 * d) + attention + mlp
    return embed + cfg.depth * block + 2 * d


def count_mobilenet_parameters(cfg: MobileNetV2Config) -> int:
    """Trainable parameters of the motion backbone (features only), from the config alone."""

    def conv_bn(cin: int, cout: int, k: int, groups: int = 1) -> int:
        return cout * (cin // groups) * k * k + 2 * cout

    channels = cfg.stem_width
    total = conv_bn(cfg.in_channels, channels, 3)
    for t, c, n, _ in cfg.stages:
        out = cfg.channels(c)
        for _ in range(n):
            hidden = int(round(channels * t))
            if t != 1:
                total += conv_bn(channels, hidden, 1)
            total += conv_bn(hidden, hidden, 3, groups=hidden)
            total += conv_bn(hidden, out, 1)
            channels = out
    total += conv_bn(channels, cfg.final_dim, 1)
    return total


def count_parameters(cfg: ViTConfig | MobileNetV2Config) -> int:
    """Backbone parameter count for either encoder config."""
    if isinstance(cfg, ViTConfig):
        return count_vit_parameters(cfg)
    return count_mobilenet_parameters(cfg)
