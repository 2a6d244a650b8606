"""
Clip ingestion and uniform temporal sampling.

Videos arrive as directories of sequentially numbered still images
(``frame_00001.png`` ...); codec decoding happens upstream. Frames are held
in memory as RGB ``uint8`` arrays of shape (H, W, 3).

Resizing uses bilinear interpolation with half-pixel centres
(align_corners=False), stretching directly to size x size without
preserving aspect ratio.
"""

import re
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from dualstream.core.logging import get_logger
from dualstream.core.utils import DualStreamError

logger = get_logger()

SUPPORTED_SUFFIXES = (".png", ".ppm")
DEFAULT_NUM_FRAMES = 16
DEFAULT_FRAME_SIZE = 224

_FRAME_INDEX_RE = re.compile(r"(\d+)(?!.*\d)")


class VideoIOError(DualStreamError):
    """Base class for clip ingestion and sampling errors."""

    pass


class MissingFrames(VideoIOError):
    """Raised when a clip directory holds fewer than two decodable frames."""

    pass


class DimensionMismatch(VideoIOError):
    """Raised when frames within one clip do not share the same dimensions."""

    pass


class TooFewFrames(VideoIOError):
    """Raised when sampling is requested from a clip with fewer than two frames."""

    pass


@dataclass(frozen=True)
class Clip:
    """
    A decoded clip.

    Attributes:
        id: Clip identifier (the frame directory name by default).
        class_label: Class index in [0, C).
        frames: Ordered RGB frames, all H x W x 3 uint8.
        source_path: Directory the frames were read from.
    """

    id: str
    class_label: int
    frames: list[np.ndarray] = field(repr=False)
    source_path: Path

    @property
    def num_frames(self) -> int:
        return len(self.frames)

    @property
    def frame_shape(self) -> tuple[int, ...]:
        return tuple(self.frames[0].shape)


@dataclass(frozen=True)
class SampledClip:
    """
    N uniformly sampled frames, each resized to S x S.

    Attributes:
        frames: Exactly N RGB frames of shape (S, S, 3).
        middle_index: floor(N / 2); the frame the appearance stream sees.
        sample_indices: The N source frame indices (non-decreasing).
    """

    frames: list[np.ndarray] = field(repr=False)
    middle_index: int
    sample_indices: tuple[int, ...]

    @property
    def middle_frame(self) -> np.ndarray:
        return self.frames[self.middle_index]

    @property
    def size(self) -> int:
        return int(self.frames[0].shape[0])


def round_uniform(i: int, span: int, steps: int) -> int:
    """
    Evaluate round(i * span / steps) with round-half-up, in exact integer arithmetic.

    Args:
        i: Step index.
        span: Total span to cover (e.g. T - 1).
        steps: Number of intervals (e.g. n - 1); must be positive.

    Returns:
        The rounded position.
    """
    return (2 * i * span + steps) // (2 * steps)


def uniform_indices(total: int, count: int) -> list[int]:
    """
    Choose `count` indices uniformly over [0, total - 1], endpoints included.

    Index i is round(i * (total - 1) / (count - 1)). When total < count,
    indices repeat.

    Args:
        total: Number of available frames T (>= 2).
        count: Number of indices n (>= 2).

    Returns:
        A non-decreasing list of `count` indices starting at 0 and ending at total - 1.

    Raises:
        TooFewFrames: If total < 2.
        ValueError: If count < 2.
    """
    if total < 2:
        raise TooFewFrames(f"Need at least 2 frames to sample from, got {total}")
    if count < 2:
        raise ValueError(f"Sample count must be at least 2, got {count}")
    return [round_uniform(i, total - 1, count - 1) for i in range(count)]


def frame_index(path: Path) -> int:
    """Extract the trailing frame number from a filename like frame_00012.png."""
    match = _FRAME_INDEX_RE.search(path.stem)
    if not match:
        raise ValueError(f"Frame filename has no numeric index: {path.name}")
    return int(match.group(1))


def list_frame_files(directory: Path) -> list[Path]:
    """List supported frame files in a directory, ordered by numeric filename index."""
    files = [
        p for p in directory.iterdir()
        if p.is_file() and p.suffix.lower() in SUPPORTED_SUFFIXES and _FRAME_INDEX_RE.search(p.stem)
    ]
    return sorted(files, key=lambda p: (frame_index(p), p.name))


def read_frame(path: Path) -> np.ndarray | None:
    """Decode one frame as RGB uint8, or None if it cannot be decoded."""
    bgr = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if bgr is None:
        return None
    return cv2.cvtColor(bgr, cv2.COLOR_BGR2RGB)


def write_frame(path: Path, frame: np.ndarray) -> None:
    """Encode an RGB uint8 frame to PNG/PPM according to the path suffix."""
    path.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), cv2.cvtColor(frame, cv2.COLOR_RGB2BGR)):
        raise OSError(f"Failed to write frame: {path}")


def ingest_clip(
    path: Path | str,
    label: int,
    clip_id: str | None = None,
    num_classes: int | None = None,
) -> Clip:
    """
    Read a directory of sequentially numbered frames into a Clip.

    Args:
        path: Clip directory containing frame_%05d.png (or .ppm) files.
        label: Class index of the clip.
        clip_id: Identifier to use; defaults to the directory name.
        num_classes: When given, label must lie in [0, num_classes).

    Returns:
        The decoded clip with frames ordered by filename index.

    Raises:
        MissingFrames: If the directory is missing or holds fewer than 2 decodable frames.
        DimensionMismatch: If frames differ in size.
        ValueError: If the label is out of range.
    """
    directory = Path(path)
    if num_classes is not None and not 0 <= label < num_classes:
        raise ValueError(f"Class label {label} outside [0, {num_classes})")
    if not directory.is_dir():
        raise MissingFrames(f"Clip directory does not exist: {directory}")

    frames: list[np.ndarray] = []
    for frame_path in list_frame_files(directory):
        frame = read_frame(frame_path)
        if frame is None:
            logger.warning(f"Skipping undecodable frame {frame_path}")
            continue
        if frames and frame.shape != frames[0].shape:
            raise DimensionMismatch(
                f"Frame {frame_path.name} has shape {frame.shape}, "
                f"expected {frames[0].shape} in clip {directory}"
            )
        frames.append(frame)

    if len(frames) < 2:
        raise MissingFrames(
            f"Clip {directory} has {len(frames)} decodable frame(s); at least 2 are required"
        )

    clip = Clip(
        id=clip_id or directory.name,
        class_label=label,
        frames=frames,
        source_path=directory,
    )
    logger.verbose(f"Ingested clip {clip.id}: {clip.num_frames} frames of {clip.frame_shape}")
    return clip


def resize_frame(frame: np.ndarray, size: int) -> np.ndarray:
    """Bilinearly resize an image to size x size (half-pixel centres)."""
    if frame.shape[0] == size and frame.shape[1] == size:
        return frame.copy()
    return cv2.resize(frame, (size, size), interpolation=cv2.INTER_LINEAR)


def to_gray(frame: np.ndarray) -> np.ndarray:
    """Convert an RGB uint8 frame to luma 0.299R + 0.587G + 0.114B (uint8)."""
    return cv2.cvtColor(frame, cv2.COLOR_RGB2GRAY)


def sample_uniform(
    clip: Clip,
    n: int = DEFAULT_NUM_FRAMES,
    size: int = DEFAULT_FRAME_SIZE,
) -> SampledClip:
    """
    Uniformly sample n frames from a clip and resize each to size x size.

    Args:
        clip: The source clip (T >= 2 frames).
        n: Number of frames to sample.
        size: Output side length in pixels.

    Returns:
        A SampledClip whose middle_index is floor(n / 2).

    Raises:
        TooFewFrames: If the clip has fewer than 2 frames.
    """
    indices = uniform_indices(clip.num_frames, n)
    frames = [resize_frame(clip.frames[i], size) for i in indices]
    return SampledClip(frames=frames, middle_index=n // 2, sample_indices=tuple(indices))
