"""
Deterministic synthetic action clips.

Every clip shows one anti-aliased shape on a smooth random texture. The whole
scene translates at a constant integer velocity, so the flow field is uniform
and known, and the shape sits at the frame centre in the middle frame. A class
is a pair (appearance, motion):

- appearance: shape and colour; fixed across classes in ``motion`` mode
- motion: direction and speed; zero for every class in ``appearance`` mode
- mixed: each class gets a unique pair from an A x M grid, A = ceil(sqrt(C)),
  so neither stream alone separates all classes

Each clip draws from its own generator keyed on (seed, clip id), so output is
byte-identical whatever the worker count.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any

import cv2
import numpy as np
from tqdm import tqdm

from dualstream.core.logging import get_logger
from dualstream.core.schema import dataclass_from_dict
from dualstream.core.utils import make_rng
from dualstream.videoio import ClipRecord, DatasetManifest, write_frame

logger = get_logger()

SHAPES = ("disc", "square", "triangle")
PALETTE = (
    (220, 40, 40),
    (40, 90, 230),
    (40, 190, 60),
    (235, 200, 30),
    (200, 60, 200),
    (30, 200, 210),
    (245, 130, 20),
    (250, 250, 250),
)
# Right, left, up, down, then the diagonals (image rows grow downwards).
DIRECTIONS = ((1, 0), (-1, 0), (0, -1), (0, 1), (1, -1), (-1, -1), (1, 1), (-1, 1))
DIRECTION_NAMES = ("right", "left", "up", "down", "upright", "upleft", "downright", "downleft")
FRAME_PATTERN = "frame_{:04d}.png"


class CueMode(str, Enum):
    APPEARANCE = "appearance"
    MOTION = "motion"
    MIXED = "mixed"


@dataclass
class SynthSpec:
    """Synthetic dataset parameters; ``speed`` is pixels per frame along each moving axis."""

    num_classes: int = 4
    clips_per_class: int = 40
    frames_per_clip: int = 16
    image_size: int = 32
    cue_mode: CueMode = CueMode.MIXED
    noise_level: float = 0.0
    seed: int = 42
    speed: int = 3

    def __post_init__(self) -> None:
        self.cue_mode = CueMode(self.cue_mode)
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be at least 2, got {self.num_classes}")
        if self.clips_per_class < 3:
            raise ValueError(f"clips_per_class must be at least 3, got {self.clips_per_class}")
        if self.frames_per_clip < 2:
            raise ValueError(f"frames_per_clip must be at least 2, got {self.frames_per_clip}")
        if self.image_size < 16:
            raise ValueError(f"image_size must be at least 16, got {self.image_size}")
        if self.speed < 1 or self.noise_level < 0:
            raise ValueError("speed must be >= 1 and noise_level >= 0")
        if self.cue_mode is CueMode.APPEARANCE and self.num_classes > len(SHAPES) * len(PALETTE):
            limit = len(SHAPES) * len(PALETTE)
            raise ValueError(f"appearance mode supports at most {limit} classes")

    @property
    def appearance_groups(self) -> int:
        return math.ceil(math.sqrt(self.num_classes))

    def class_cues(self, class_index: int) -> tuple[int | None, int | None]:
        """(appearance index, motion index) of a class; None means the shared cue."""
        if self.cue_mode is CueMode.APPEARANCE:
            return class_index, None
        if self.cue_mode is CueMode.MOTION:
            return None, class_index
        groups = self.appearance_groups
        return class_index % groups, class_index // groups

    def class_name(self, class_index: int) -> str:
        appearance, motion = self.class_cues(class_index)
        parts = [f"c{class_index:02d}"]
        if appearance is not None:
            parts.append(f"{SHAPES[appearance % len(SHAPES)]}{appearance % len(PALETTE)}")
        if motion is not None:
            parts.append(DIRECTION_NAMES[motion % len(DIRECTIONS)])
        return "_".join(parts)

    @property
    def class_names(self) -> list[str]:
        return [self.class_name(c) for c in range(self.num_classes)]

    @classmethod
    def from_dict(cls, data: dict[str, Any] | None) -> "SynthSpec":
        return dataclass_from_dict(cls, data, "synth")


def velocity(motion: int | None, speed: int) -> tuple[int, int]:
    """Per-frame (dx, dy); directions beyond the eight base ones repeat at higher speed."""
    if motion is None:
        return 0, 0
    dx, dy = DIRECTIONS[motion % len(DIRECTIONS)]
    factor = speed * (1 + motion // len(DIRECTIONS))
    return dx * factor, dy * factor


def texture(height: int, width: int, rng: np.random.Generator) -> np.ndarray:
    """Smooth colour texture: coarse random grid, bicubic upsampling, light blur."""
    cell = 4
    coarse = rng.integers(50, 206, size=(height // cell + 2, width // cell + 2, 3), dtype=np.uint8)
    smooth = cv2.resize(coarse, (width, height), interpolation=cv2.INTER_CUBIC)
    return cv2.GaussianBlur(smooth, (3, 3), 0.8)


def draw_shape(
    canvas: np.ndarray,
    shape: str,
    center: tuple[int, int],
    radius: int,
    color: tuple[int, int, int],
) -> None:
    x, y = center
    if shape == "disc":
        cv2.circle(canvas, (x, y), radius, color, thickness=-1, lineType=cv2.LINE_AA)
    elif shape == "square":
        half = max(1, int(round(radius * 0.85)))
        corners = np.array(
            [[x - half, y - half], [x + half, y - half], [x + half, y + half], [x - half, y + half]]
        )
        cv2.fillPoly(canvas, [corners.astype(np.int32)], color, lineType=cv2.LINE_AA)
    else:
        base = y + radius * 3 // 4
        corners = np.array([[x, y - radius], [x + radius, base], [x - radius, base]])
        cv2.fillPoly(canvas, [corners.astype(np.int32)], color, lineType=cv2.LINE_AA)


def render_clip(spec: SynthSpec, class_index: int, clip_id: str) -> list[np.ndarray]:
    """
    Render one clip as RGB uint8 frames of size image_size.

    The scene is a static canvas; frame t crops it at an origin moving by
    -velocity per frame, so content moves by +velocity in the image.
    """
    rng = make_rng(spec.seed, "synth", clip_id)
    size = spec.image_size
    appearance, motion = spec.class_cues(class_index)
    vx, vy = velocity(motion, spec.speed)
    middle = spec.frames_per_clip // 2
    reach = max(middle, spec.frames_per_clip - 1 - middle)
    margin = max(abs(vx), abs(vy)) * reach + 2
    canvas = texture(size + 2 * margin, size + 2 * margin, rng)

    appearance_index = 0 if appearance is None else appearance
    shape = SHAPES[appearance_index % len(SHAPES)]
    color = PALETTE[appearance_index % len(PALETTE)]
    centre = margin + size // 2
    draw_shape(canvas, shape, (centre, centre), max(2, size // 5), color)

    frames = []
    for t in range(spec.frames_per_clip):
        x0 = margin - vx * (t - middle)
        y0 = margin - vy * (t - middle)
        frame = canvas[y0 : y0 + size, x0 : x0 + size]
        if spec.noise_level > 0:
            noise = rng.normal(0.0, spec.noise_level * 255.0, frame.shape)
            noisy = frame.astype(np.float64) + noise
            frame = np.clip(np.rint(noisy), 0, 255).astype(np.uint8)
        frames.append(np.ascontiguousarray(frame))
    return frames


def _write_clip(job: tuple[SynthSpec, ClipRecord, Path]) -> str:
    spec, record, root = job
    clip_dir = record.frame_dir(root)
    for t, frame in enumerate(render_clip(spec, record.class_index, record.id)):
        write_frame(clip_dir / FRAME_PATTERN.format(t), frame)
    return record.id


def plan_manifest(spec: SynthSpec) -> DatasetManifest:
    """Manifest of every clip to render, without split assignment."""
    classes = spec.class_names
    clips = [
        ClipRecord(id=f"{classes[c]}_v{j:03d}", class_name=classes[c], class_index=c)
        for c in range(spec.num_classes)
        for j in range(spec.clips_per_class)
    ]
    return DatasetManifest(classes=classes, clips=clips)


def generate(
    spec: SynthSpec, out_root: Path | str, workers: int = 1, progress: bool = True
) -> DatasetManifest:
    """
    Write a synthetic dataset as <out_root>/<class>/<clip>/frame_NNNN.png plus manifest.json.

    Args:
        spec: Dataset parameters.
        out_root: Destination root directory.
        workers: Worker processes (1 renders in-process).
        progress: Show a tqdm progress bar.

    Returns:
        The dataset manifest (also saved to out_root/manifest.json).

    Raises:
        OSError: If frames or the manifest cannot be written.
    """
    root = Path(out_root)
    root.mkdir(parents=True, exist_ok=True)
    manifest = plan_manifest(spec)
    jobs = [(spec, record, root) for record in manifest.clips]
    logger.info(
        f"Generating {len(jobs)} {spec.cue_mode.value} clips "
        f"({spec.num_classes} classes, {spec.frames_per_clip} frames of {spec.image_size}px) "
        f"in {root}"
    )
    bar = tqdm(total=len(jobs), desc="synth", unit="clip", disable=not progress)
    if workers <= 1:
        for job in jobs:
            _write_clip(job)
            bar.update()
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for clip_id in pool.map(_write_clip, jobs):
                logger.verbose(f"Wrote {clip_id}")
                bar.update()
    bar.close()
    manifest.save(root)
    return manifest
