"""Shared fixtures: a small synthetic dataset and a desk-scale configuration."""

from pathlib import Path

import numpy as np
import pytest

from dualstream.core.config import Config
from dualstream.synthgen import CueMode, SynthSpec, generate
from dualstream.videoio import write_frame

TINY_MODEL = {
    "vit": {
        "image_size": 32,
        "patch_size": 8,
        "embed_dim": 16,
        "depth": 1,
        "heads": 2,
        "mlp_ratio": 2.0,
    },
    "mobilenet": {"input_size": 32, "width_multiplier": 0.25, "scale_head": True},
    "attention_heads": 2,
}


def write_clip(
    directory: Path, frames: list[np.ndarray], pattern: str = "frame_{:05d}.png"
) -> Path:
    """Write RGB frames as numbered PNGs starting at index 1."""
    for i, frame in enumerate(frames, start=1):
        write_frame(directory / pattern.format(i), frame)
    return directory


def tiny_config_dict(dataset_root: Path, cache_root: Path, output_dir: Path) -> dict:
    return {
        "dataset": {
            "root": str(dataset_root),
            "cache_root": str(cache_root),
            "num_frames": 12,
            "frame_size": 32,
        },
        "flow": {"farneback": {"levels": 3, "winsize": 7}},
        "model": dict(TINY_MODEL),
        "train": {
            "lr": 1e-3,
            "flow_only_lr": 1e-3,
            "batch_size": 4,
            "max_epochs": 2,
            "flow_only_max_epochs": 2,
            "patience": 1,
            "seed": 7,
            "deterministic": True,
        },
        "report": {"formats": ["json", "csv"]},
        "output_dir": str(output_dir),
    }


@pytest.fixture(scope="session")
def synth_spec() -> SynthSpec:
    return SynthSpec(
        num_classes=3,
        clips_per_class=6,
        frames_per_clip=12,
        image_size=32,
        cue_mode=CueMode.MIXED,
        seed=3,
    )


@pytest.fixture(scope="session")
def synth_root(tmp_path_factory, synth_spec) -> Path:
    root = tmp_path_factory.mktemp("synth") / "mixed"
    generate(synth_spec, root, workers=1, progress=False)
    return root


@pytest.fixture
def tiny_config(synth_root, tmp_path) -> Config:
    """Desk-scale config over the shared synthetic dataset with a private cache and output dir."""
    config = Config.from_dict(tiny_config_dict(synth_root, tmp_path / "cache", tmp_path / "runs"))
    config.dataset.split_file = str(tmp_path / "split.json")
    return config
