"""Tests for synthetic clip rendering and dataset generation."""

import math

import numpy as np
import pytest

from dualstream.core.utils import sha256_tree
from dualstream.flow import FarnebackParams, build_flow_stack, estimate_flow
from dualstream.synthgen import (
    PALETTE,
    CueMode,
    SynthSpec,
    generate,
    plan_manifest,
    render_clip,
    velocity,
)
from dualstream.videoio import DatasetManifest, ingest_clip, sample_uniform, scan_layout


def spec(mode: CueMode, **kwargs) -> SynthSpec:
    values = {
        "num_classes": 4,
        "clips_per_class": 3,
        "frames_per_clip": 12,
        "image_size": 32,
        "seed": 9,
    }
    return SynthSpec(cue_mode=mode, **{**values, **kwargs})


class TestSynthSpec:
    """Tests for class cues and names."""

    def test_mixed_names(self):
        """Test that mixed classes pair an appearance with a motion."""
        assert spec(CueMode.MIXED, num_classes=3).class_names == [
            "c00_disc0_right",
            "c01_square1_right",
            "c02_disc0_left",
        ]

    def test_single_cue_names(self):
        """Test names in appearance and motion modes."""
        assert spec(CueMode.APPEARANCE, num_classes=2).class_names == ["c00_disc0", "c01_square1"]
        assert spec(CueMode.MOTION, num_classes=2).class_names == ["c00_right", "c01_left"]

    @pytest.mark.parametrize("classes", [2, 4, 5, 9, 11])
    def test_mixed_pairs_unique(self, classes):
        """Test that every mixed class has its own (appearance, motion) pair."""
        s = spec(CueMode.MIXED, num_classes=classes)
        cues = [s.class_cues(c) for c in range(classes)]
        assert len(set(cues)) == classes
        assert s.appearance_groups == math.ceil(math.sqrt(classes))

    def test_velocity(self):
        """Test per-frame displacement for base and repeated directions."""
        assert velocity(None, 3) == (0, 0)
        assert velocity(0, 3) == (3, 0)
        assert velocity(2, 3) == (0, -3)
        assert velocity(9, 2) == (-4, 0)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"num_classes": 1},
            {"clips_per_class": 2},
            {"image_size": 8},
            {"noise_level": -0.1},
            {"cue_mode": "appearance", "num_classes": 25},
        ],
    )
    def test_invalid(self, kwargs):
        """Test that invalid parameters raise ValueError."""
        with pytest.raises(ValueError):
            SynthSpec(**kwargs)


class TestRenderClip:
    """Tests for render_clip."""

    def test_frames(self):
        """Test frame count, size and dtype."""
        frames = render_clip(spec(CueMode.MIXED), 1, "x")
        assert len(frames) == 12
        assert all(f.shape == (32, 32, 3) and f.dtype == np.uint8 for f in frames)

    def test_uniform_translation(self):
        """Test that consecutive frames are shifted copies of the scene."""
        frames = render_clip(spec(CueMode.MOTION), 0, "x")
        np.testing.assert_array_equal(frames[1][:, 3:], frames[0][:, :-3])

    def test_appearance_mode_static(self):
        """Test that appearance-only clips do not move."""
        frames = render_clip(spec(CueMode.APPEARANCE), 2, "x")
        assert all(np.array_equal(f, frames[0]) for f in frames)

    def test_motion_mode_shared_appearance(self):
        """Test that every motion class shows the same colour at the middle frame's centre."""
        s = spec(CueMode.MOTION)
        for class_index in range(4):
            middle = render_clip(s, class_index, f"clip{class_index}")[6]
            assert tuple(middle[16, 16]) == PALETTE[0]

    @pytest.mark.parametrize("class_index", range(4))
    def test_recovered_direction(self, class_index):
        """Test that Farneback recovers each motion class's direction within 30 degrees."""
        s = spec(CueMode.MOTION, image_size=64, speed=3)
        frames = render_clip(s, class_index, f"dir{class_index}")
        flow = estimate_flow(frames[5], frames[6], FarnebackParams())
        inner = (slice(12, 52), slice(12, 52))
        u, v = float(flow.u[inner].mean()), float(flow.v[inner].mean())
        dx, dy = velocity(class_index, 3)
        angle = math.degrees(math.atan2(v, u) - math.atan2(dy, dx))
        assert abs((angle + 180.0) % 360.0 - 180.0) <= 30.0

    def test_noise_deterministic(self):
        """Test that noisy clips are reproducible and differ from clean ones."""
        noisy = spec(CueMode.MIXED, noise_level=0.05)
        a = render_clip(noisy, 0, "n")
        b = render_clip(noisy, 0, "n")
        clean = render_clip(spec(CueMode.MIXED), 0, "n")
        assert all(np.array_equal(x, y) for x, y in zip(a, b))
        assert not np.array_equal(a[0], clean[0])


class TestGenerate:
    """Tests for generate."""

    def test_layout_and_manifest(self, tmp_path):
        """Test that the output is a videoio dataset with a matching manifest."""
        s = spec(CueMode.MIXED, num_classes=2, frames_per_clip=4)
        manifest = generate(s, tmp_path, progress=False)
        assert manifest == plan_manifest(s)
        assert DatasetManifest.load(tmp_path) == manifest
        assert {c.id for c in scan_layout(tmp_path).clips} == {c.id for c in manifest.clips}
        record = manifest.clips[0]
        assert record.id == "c00_disc0_right_v000"
        clip = ingest_clip(record.frame_dir(tmp_path), record.class_index)
        assert clip.num_frames == 4

    def test_byte_identical(self, tmp_path):
        """Test that the same seed gives identical files whatever the worker count."""
        s = spec(CueMode.MIXED, num_classes=2, frames_per_clip=4, noise_level=0.02)
        generate(s, tmp_path / "a", workers=1, progress=False)
        generate(s, tmp_path / "b", workers=2, progress=False)
        assert sha256_tree(tmp_path / "a") == sha256_tree(tmp_path / "b")

    def test_appearance_mode_flow_near_zero(self, tmp_path):
        """Test that appearance-only clips give flow channels within 3 of the zero level."""
        s = spec(CueMode.APPEARANCE, num_classes=3)
        manifest = generate(s, tmp_path, progress=False)
        params = FarnebackParams(levels=3, winsize=7)
        for record in manifest.clips[::3]:
            clip = ingest_clip(record.frame_dir(tmp_path), record.class_index)
            stack = build_flow_stack(sample_uniform(clip, 12, 32), params).quantized()
            assert np.all(np.abs(stack.channels.astype(np.float64) - 127.5) <= 3.0)
