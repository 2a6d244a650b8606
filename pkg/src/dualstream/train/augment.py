"""
RGB augmentation and ImageNet normalisation.

Augmentation is drawn first (``draw_augmentation``) and applied second
(``apply_augmentation``), so tests can force any transform. Flow stacks never
pass through here.
"""

from dataclasses import dataclass
from typing import Any

import cv2
import numpy as np

from dualstream.core.schema import dataclass_from_dict

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


@dataclass
class AugmentPolicy:
    """RGB augmentation ranges and normalisation statistics."""

    enabled: bool = True
    hflip_prob: float = 0.5
    max_rotation: float = 10.0
    max_translation: float = 0.1
    mean: tuple[float, float, float] = IMAGENET_MEAN
    std: tuple[float, float, float] = IMAGENET_STD

    def __post_init__(self) -> None:
        self.mean = tuple(float(x) for x in self.mean)  # type: ignore[assignment]
        self.std = tuple(float(x) for x in self.std)  # type: ignore[assignment]
        if not 0.0 <= self.hflip_prob <= 1.0:
            raise ValueError(f"hflip_prob must lie in [0, 1], got {self.hflip_prob}")
        if self.max_rotation < 0 or not 0.0 <= self.max_translation < 1.0:
            raise ValueError("max_rotation must be >= 0 and max_translation in [0, 1)")
        if len(self.mean) != 3 or len(self.std) != 3 or min(self.std) <= 0:
            raise ValueError("mean and std need three entries with positive std")

    @classmethod
    def from_dict(cls, data: dict[str, Any] | None) -> "AugmentPolicy":
        return dataclass_from_dict(cls, data, "augment")


@dataclass(frozen=True)
class AugmentParams:
    """One concrete draw: flip, rotation in degrees, translation as fractions of W and H."""

    flip: bool = False
    angle: float = 0.0
    tx: float = 0.0
    ty: float = 0.0

    @property
    def is_identity_warp(self) -> bool:
        return self.angle == 0.0 and self.tx == 0.0 and self.ty == 0.0


def draw_augmentation(policy: AugmentPolicy, rng: np.random.Generator) -> AugmentParams:
    """Sample flip, rotation U(-r, r) and per-axis translation U(-t, t)."""
    if not policy.enabled:
        return AugmentParams()
    flip = bool(rng.random() < policy.hflip_prob)
    angle = float(rng.uniform(-policy.max_rotation, policy.max_rotation))
    tx = float(rng.uniform(-policy.max_translation, policy.max_translation))
    ty = float(rng.uniform(-policy.max_translation, policy.max_translation))
    return AugmentParams(flip=flip, angle=angle, tx=tx, ty=ty)


def apply_augmentation(frame: np.ndarray, params: AugmentParams) -> np.ndarray:
    """Flip, then rotate about the centre and translate with bilinear resampling (zero fill)."""
    out = frame[:, ::-1] if params.flip else frame
    if params.is_identity_warp:
        return np.ascontiguousarray(out)
    height, width = out.shape[:2]
    matrix = cv2.getRotationMatrix2D(((width - 1) / 2.0, (height - 1) / 2.0), params.angle, 1.0)
    matrix[0, 2] += params.tx * width
    matrix[1, 2] += params.ty * height
    return cv2.warpAffine(
        np.ascontiguousarray(out),
        matrix,
        (width, height),
        flags=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_CONSTANT,
        borderValue=0,
    )


def normalize_rgb(frame: np.ndarray, policy: AugmentPolicy | None = None) -> np.ndarray:
    """uint8 H x W x 3 -> float32 3 x H x W with per-channel (x/255 - mean) / std."""
    policy = policy or AugmentPolicy()
    mean = np.asarray(policy.mean, dtype=np.float32)
    std = np.asarray(policy.std, dtype=np.float32)
    scaled = (frame.astype(np.float32) / np.float32(255.0) - mean) / std
    return np.ascontiguousarray(scaled.transpose(2, 0, 1))


def augment_rgb(
    frame: np.ndarray,
    policy: AugmentPolicy,
    rng: np.random.Generator | None,
    training: bool,
) -> np.ndarray:
    """Training: draw and apply an augmentation, then normalise. Eval: normalise only."""
    if training and rng is not None:
        frame = apply_augmentation(frame, draw_augmentation(policy, rng))
    return normalize_rgb(frame, policy)
