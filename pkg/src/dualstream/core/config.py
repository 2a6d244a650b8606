"""Configuration management for DualStream.

Handles configuration loading with the following precedence (highest to lowest):
1. Dotted ``--set section.key=value`` overrides
2. CLI arguments
3. Config file (YAML or JSON)
4. Default values (the cache root defaults to $DUALSTREAM_CACHE when set)
"""

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from dualstream.core.logging import get_logger
from dualstream.core.schema import (
    ConfigError,
    dataclass_from_dict,
    dataclass_to_dict,
    normalize_key,
)
from dualstream.core.utils import atomic_write
from dualstream.encoders import MobileNetV2Config, ViTConfig, load_encoder_config
from dualstream.flow import FarnebackParams
from dualstream.fusion import ATTENTION_HEADS, PROJECTION_DROPOUT, ModelKind
from dualstream.metrics.scores import DEFAULT_TOP_K
from dualstream.synthgen.generator import SynthSpec
from dualstream.train.augment import AugmentPolicy
from dualstream.train.config import TrainConfig
from dualstream.train.dataset import DatasetSettings
from dualstream.train.split import DEFAULT_FRACTIONS

logger = get_logger()

# Environment variable names
ENV_CONFIG_FILE = "DUALSTREAM_CONFIG"
ENV_CACHE_ROOT = "DUALSTREAM_CACHE"

RESOLVED_CONFIG_FILENAME = "resolved_config.json"

# Flat CLI argument name -> dotted config key
CLI_KEYS = {
    "dataset_root": "dataset.root",
    "cache_root": "dataset.cache_root",
    "output_dir": "output_dir",
    "kind": "model.kind",
    "init_checkpoint": "model.init_checkpoint",
    "workers": "flow.workers",
    "keep_going": "flow.keep_going",
    "seed": "train.seed",
    "deterministic": "train.deterministic",
    "cue_mode": "synth.cue_mode",
    "num_classes": "synth.num_classes",
    "clips_per_class": "synth.clips_per_class",
    "frames_per_clip": "synth.frames_per_clip",
    "image_size": "synth.image_size",
    "noise_level": "synth.noise_level",
    "synth_seed": "synth.seed",
}


@dataclass
class DatasetConfig:
    """Where the clips and the flow cache live and how clips are sampled and split."""

    root: str = ""
    cache_root: str = ""
    num_frames: int = 16
    frame_size: int = 224
    fractions: tuple[float, float, float] = DEFAULT_FRACTIONS
    split_seed: int = 42
    split_file: str = ""

    def __post_init__(self) -> None:
        self.fractions = tuple(float(f) for f in self.fractions)  # type: ignore[assignment]
        if self.num_frames < 11:
            raise ValueError(
                f"num_frames must be at least 11 for a 10-pair flow stack, got {self.num_frames}"
            )
        if self.frame_size < 1:
            raise ValueError(f"frame_size must be positive, got {self.frame_size}")

    @property
    def split_path(self) -> Path:
        return Path(self.split_file) if self.split_file else Path(self.root) / "split.json"


@dataclass
class FlowConfig:
    """Farneback parameters and cache-population behaviour."""

    farneback: FarnebackParams = field(default_factory=FarnebackParams)
    workers: int = 1
    keep_going: bool = False
    fallback: bool = True

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")


@dataclass
class ModelConfig:
    """Experiment configuration kind, encoder architectures and fusion settings.

    ``vit_config`` / ``mobilenet_config`` name encoder files; keys given
    inline under ``vit`` / ``mobilenet`` are applied on top of them.
    """

    kind: ModelKind = ModelKind.ATTENTION
    vit: ViTConfig = field(default_factory=ViTConfig)
    mobilenet: MobileNetV2Config = field(default_factory=MobileNetV2Config)
    vit_config: str = ""
    mobilenet_config: str = ""
    projection_dropout: float = PROJECTION_DROPOUT
    attention_heads: int = ATTENTION_HEADS
    init_checkpoint: str = ""

    def __post_init__(self) -> None:
        self.kind = ModelKind(self.kind)
        if not 0.0 <= self.projection_dropout < 1.0:
            raise ValueError(
                f"projection_dropout must lie in [0, 1), got {self.projection_dropout}"
            )


@dataclass
class ReportConfig:
    top_k: tuple[int, ...] = DEFAULT_TOP_K
    formats: tuple[str, ...] = ("json", "csv", "svg")

    def __post_init__(self) -> None:
        self.top_k = tuple(int(k) for k in self.top_k)
        self.formats = tuple(str(f) for f in self.formats)
        unknown = set(self.formats) - {"json", "csv", "svg"}
        if unknown:
            raise ValueError(f"Unknown report formats: {sorted(unknown)}")


SECTIONS: dict[str, type] = {
    "dataset": DatasetConfig,
    "flow": FlowConfig,
    "model": ModelConfig,
    "train": TrainConfig,
    "augment": AugmentPolicy,
    "synth": SynthSpec,
    "report": ReportConfig,
}


def _normalize_tree(data: Any) -> Any:
    if isinstance(data, dict):
        return {normalize_key(k): _normalize_tree(v) for k, v in data.items()}
    return data


def _set_dotted(data: dict[str, Any], dotted: str, value: Any) -> None:
    keys = [normalize_key(k) for k in dotted.split(".") if k]
    if not keys:
        raise ConfigError(f"Empty configuration key in '{dotted}'")
    node = data
    for key in keys[:-1]:
        child = node.setdefault(key, {})
        if not isinstance(child, dict):
            raise ConfigError(f"'{key}' in '{dotted}' is not a section")
        node = child
    node[keys[-1]] = value


def parse_override(text: str) -> tuple[str, Any]:
    """Split ``a.b=value``; the value is parsed as a YAML scalar or flow collection."""
    key, sep, raw = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"Override '{text}' is not of the form section.key=value")
    try:
        value = yaml.safe_load(raw) if raw.strip() else ""
    except yaml.YAMLError as e:
        raise ConfigError(f"Cannot parse value of override '{text}': {e}") from e
    return key.strip(), value


def _resolve_path(path: str, base: Path | None) -> Path:
    candidate = Path(path).expanduser()
    if not candidate.is_absolute() and base is not None and not candidate.exists():
        relative = base / candidate
        if relative.exists():
            return relative
    return candidate


@dataclass
class Config:
    """Main configuration container."""

    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    flow: FlowConfig = field(default_factory=FlowConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    augment: AugmentPolicy = field(default_factory=AugmentPolicy)
    synth: SynthSpec = field(default_factory=SynthSpec)
    report: ReportConfig = field(default_factory=ReportConfig)
    output_dir: str = "runs/default"

    def __post_init__(self) -> None:
        size = self.dataset.frame_size
        if self.model.vit.image_size != size or self.model.mobilenet.input_size != size:
            raise ConfigError(
                f"dataset.frame_size ({size}) must equal model.vit.image_size "
                f"({self.model.vit.image_size}) and model.mobilenet.input_size "
                f"({self.model.mobilenet.input_size})"
            )

    @classmethod
    def load(
        cls,
        config_file: Path | str | None = None,
        cli_args: dict[str, Any] | None = None,
        overrides: list[str] | tuple[str, ...] = (),
    ) -> "Config":
        """Load configuration from all sources with proper precedence.

        Args:
            config_file: Path to a YAML/JSON file. If None, $DUALSTREAM_CONFIG is used when set.
            cli_args: Flat CLI arguments (see CLI_KEYS); None values are ignored.
            overrides: ``section.key=value`` strings, applied last.

        Returns:
            Loaded, merged and validated configuration.

        Raises:
            ConfigError: On unreadable files, unknown keys or invalid values.
        """
        if config_file is None:
            config_file = os.environ.get(ENV_CONFIG_FILE) or None

        data: dict[str, Any] = {}
        base: Path | None = None
        if config_file is not None:
            config_path = Path(config_file).expanduser()
            data = cls._read_file(config_path)
            base = config_path.parent
            logger.debug(f"Loaded configuration file {config_path}")

        for name, value in (cli_args or {}).items():
            if value is None:
                continue
            if name not in CLI_KEYS:
                raise ConfigError(f"Unknown CLI argument '{name}'")
            _set_dotted(data, CLI_KEYS[name], value)

        for text in overrides:
            key, value = parse_override(text)
            _set_dotted(data, key, value)

        cls._merge_encoder_files(data, base)
        config = cls.from_dict(data)
        if not config.dataset.cache_root:
            config.dataset.cache_root = config.default_cache_root()
        return config

    @classmethod
    def _read_file(cls, path: Path) -> dict[str, Any]:
        try:
            with open(path, encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except (yaml.YAMLError, OSError) as e:
            raise ConfigError(f"Failed to load config file {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"Config file {path} must contain a mapping at the top level")
        return _normalize_tree(data)

    @classmethod
    def _merge_encoder_files(cls, data: dict[str, Any], base: Path | None) -> None:
        model = data.get("model")
        if not isinstance(model, dict):
            return
        for section in ("vit", "mobilenet"):
            path = model.get(f"{section}_config")
            if not path:
                continue
            resolved = _resolve_path(str(path), base).resolve()
            encoder = load_encoder_config(resolved, section)
            model[f"{section}_config"] = str(resolved)
            from_file = dataclass_to_dict(encoder)
            inline = model.get(section) or {}
            if not isinstance(inline, dict):
                raise ConfigError(f"Section 'model.{section}' must be a mapping")
            model[section] = {**from_file, **inline}

    @classmethod
    def from_dict(cls, data: dict[str, Any] | None) -> "Config":
        data = _normalize_tree(data or {})
        known = {*SECTIONS, "output_dir"}
        for key in data:
            if key not in known:
                raise ConfigError(
                    f"Unknown configuration section '{key}'. Known: {', '.join(sorted(known))}"
                )
        sections = {
            name: dataclass_from_dict(section, data.get(name), name)
            for name, section in SECTIONS.items()
        }
        output_dir = data.get("output_dir")
        return cls(**sections, output_dir=str(output_dir) if output_dir else "runs/default")

    def default_cache_root(self) -> str:
        """$DUALSTREAM_CACHE, else a ``<root>_flow`` sibling of the dataset root."""
        env = os.environ.get(ENV_CACHE_ROOT)
        if env:
            return env
        if self.dataset.root:
            root = Path(self.dataset.root)
            return str(root.with_name(f"{root.name}_flow"))
        return "flow_cache"

    def dataset_settings(self) -> DatasetSettings:
        return DatasetSettings(
            dataset_root=Path(self.dataset.root),
            cache_root=Path(self.dataset.cache_root),
            num_frames=self.dataset.num_frames,
            size=self.dataset.frame_size,
            params=self.flow.farneback,
            policy=self.augment,
            fallback=self.flow.fallback,
            seed=self.train.seed,
        )

    def to_dict(self) -> dict[str, Any]:
        """Convert configuration to dictionary.

        Returns:
            Dictionary representation of configuration.
        """
        return dataclass_to_dict(self)

    def save(self, path: Path | str) -> Path:
        """Save configuration; JSON for a ``.json`` suffix, YAML otherwise."""
        save_path = Path(path).expanduser()
        if save_path.suffix.lower() == ".json":
            text = json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"
        else:
            text = yaml.safe_dump(self.to_dict(), default_flow_style=False, sort_keys=False)
        atomic_write(save_path, lambda f: f.write(text.encode("utf-8")))
        return save_path

    def save_resolved(self, out_dir: Path | str) -> Path:
        return self.save(Path(out_dir) / RESOLVED_CONFIG_FILENAME)
