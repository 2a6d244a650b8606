"""Desk-experiment comparisons on motion-only, appearance-only and mixed synthetic data."""

from dataclasses import replace
from pathlib import Path

import pytest

from dualstream.core.config import Config
from dualstream.flow import extract_flows
from dualstream.fusion import ModelKind
from dualstream.synthgen import CueMode, generate
from dualstream.train import load_manifest, run_experiment_suite

CONFIGS = Path(__file__).resolve().parents[2] / "configs"

SINGLE_STREAM = ("rgb_only", "flow_only")
FUSION = tuple(kind.value for kind in ModelKind if kind.is_fusion)


def desk_config(base: Path, cue_mode: CueMode) -> Config:
    """The shipped desk experiment over a freshly generated dataset of one cue mode."""
    config = Config.load(CONFIGS / "desk_experiment.yaml")
    root = base / cue_mode.value
    spec = replace(config.synth, cue_mode=cue_mode, seed=42)
    generate(spec, root, workers=1, progress=False)

    config.dataset.root = str(root)
    config.dataset.cache_root = str(base / f"{cue_mode.value}_flow")
    config.train.deterministic = True
    config.report.formats = ("json", "csv")
    extract_flows(
        load_manifest(root),
        root,
        config.dataset.cache_root,
        params=config.flow.farneback,
        num_frames=config.dataset.num_frames,
        size=config.dataset.frame_size,
        progress=False,
    )
    return config


def accuracies(config: Config, kinds: tuple[str, ...], out: Path) -> dict[str, float]:
    suite = run_experiment_suite(config, kinds, out)
    return {run.config_id: run.test_accuracy for run in suite.runs}


@pytest.mark.slow
class TestDeskExperiment:
    """The desk config separates the two cues and fusion uses both."""

    def test_motion_only_cue(self, tmp_path):
        """Test that only the flow stream learns when classes differ by motion alone."""
        config = desk_config(tmp_path, CueMode.MOTION)
        acc = accuracies(config, SINGLE_STREAM, tmp_path / "runs")
        assert acc["flow_only"] >= 0.9
        assert acc["rgb_only"] <= 0.35

    def test_appearance_only_cue(self, tmp_path):
        """Test that only the RGB stream learns when classes differ by appearance alone."""
        config = desk_config(tmp_path, CueMode.APPEARANCE)
        acc = accuracies(config, SINGLE_STREAM, tmp_path / "runs")
        assert acc["rgb_only"] >= 0.9
        assert acc["flow_only"] <= 0.35

    def test_mixed_cues_fusion(self, tmp_path):
        """Test that every fusion head keeps up with the best single stream on mixed cues."""
        config = desk_config(tmp_path, CueMode.MIXED)
        acc = accuracies(config, SINGLE_STREAM + FUSION, tmp_path / "runs")
        best_single = max(acc[kind] for kind in SINGLE_STREAM)
        for kind in FUSION:
            assert acc[kind] >= best_single - 0.02, kind
        assert any(acc[kind] > best_single for kind in FUSION)
