"""Tests for RGB augmentation and normalisation."""

import numpy as np
import pytest

from dualstream.core.utils import make_rng
from dualstream.train import (
    IMAGENET_MEAN,
    IMAGENET_STD,
    AugmentParams,
    AugmentPolicy,
    apply_augmentation,
    augment_rgb,
    draw_augmentation,
    normalize_rgb,
)


def gradient_frame(size: int = 8) -> np.ndarray:
    row = np.arange(size, dtype=np.uint8) * 20
    return np.repeat(np.tile(row, (size, 1))[:, :, None], 3, axis=2)


class TestNormalize:
    """Tests for normalize_rgb."""

    def test_channel_statistics(self):
        """Test per-channel (x/255 - mean) / std and the channel-first layout."""
        frame = np.full((4, 4, 3), 128, dtype=np.uint8)
        out = normalize_rgb(frame)
        assert out.shape == (3, 4, 4)
        assert out.dtype == np.float32
        for c in range(3):
            expected = (128 / 255 - IMAGENET_MEAN[c]) / IMAGENET_STD[c]
            assert out[c, 0, 0] == pytest.approx(expected, abs=1e-5)


class TestAugmentation:
    """Tests for drawing and applying augmentations."""

    def test_flip(self):
        """Test that a flip reverses columns."""
        frame = gradient_frame()
        out = apply_augmentation(frame, AugmentParams(flip=True))
        np.testing.assert_array_equal(out, frame[:, ::-1])

    def test_identity(self):
        """Test that default parameters leave the frame unchanged."""
        frame = gradient_frame()
        np.testing.assert_array_equal(apply_augmentation(frame, AugmentParams()), frame)

    def test_translation(self):
        """Test that tx = 0.25 shifts content right by a quarter of the width."""
        frame = gradient_frame()
        out = apply_augmentation(frame, AugmentParams(tx=0.25))
        np.testing.assert_array_equal(out[:, 2:], frame[:, :-2])
        assert np.all(out[:, :2] == 0)

    def test_draw_ranges(self):
        """Test that draws respect the configured ranges."""
        policy = AugmentPolicy(max_rotation=10.0, max_translation=0.1)
        rng = make_rng(0, "augment")
        for _ in range(200):
            params = draw_augmentation(policy, rng)
            assert -10.0 <= params.angle <= 10.0
            assert -0.1 <= params.tx <= 0.1 and -0.1 <= params.ty <= 0.1

    def test_disabled(self):
        """Test that a disabled policy always draws the identity."""
        params = draw_augmentation(AugmentPolicy(enabled=False), make_rng(0))
        assert params == AugmentParams()

    def test_reproducible(self):
        """Test that equal generator keys give equal augmented frames."""
        frame = gradient_frame(16)
        policy = AugmentPolicy()
        a = augment_rgb(frame, policy, make_rng(7, "augment", 3, "clip"), training=True)
        b = augment_rgb(frame, policy, make_rng(7, "augment", 3, "clip"), training=True)
        np.testing.assert_array_equal(a, b)

    def test_eval_normalises_only(self):
        """Test that evaluation skips augmentation."""
        frame = gradient_frame()
        out = augment_rgb(frame, AugmentPolicy(), make_rng(1), training=False)
        np.testing.assert_array_equal(out, normalize_rgb(frame))

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"hflip_prob": 1.5},
            {"max_rotation": -1.0},
            {"max_translation": 1.0},
            {"std": (1.0, 0.0, 1.0)},
        ],
    )
    def test_invalid_policy(self, kwargs):
        """Test that out-of-range policies raise ValueError."""
        with pytest.raises(ValueError):
            AugmentPolicy(**kwargs)
