"""
Dense optical flow via Farneback polynomial expansion.

The estimator is OpenCV's ``calcOpticalFlowFarneback``: each neighbourhood is
approximated by a quadratic polynomial (Gaussian applicability with
``poly_sigma``, replicated borders) and displacements are refined
coarse-to-fine over an image pyramid.

Flow convention: for every pixel x, ``frame_a(x) ≈ frame_b(x + flow(x))``,
with ``u`` horizontal (+right) and ``v`` vertical (+down), in pixels.
"""

from dataclasses import dataclass, field
from typing import Any

import cv2
import numpy as np

from dualstream.core.logging import get_logger
from dualstream.core.utils import DualStreamError
from dualstream.videoio import DimensionMismatch

logger = get_logger()


class FlowError(DualStreamError):
    """Base class for flow estimation, stacking and cache errors."""

    pass


class ImageTooSmall(FlowError):
    """Raised when a frame is smaller than the Farneback window in either dimension."""

    pass


@dataclass(frozen=True)
class FarnebackParams:
    """
    Farneback estimator parameters.

    Attributes:
        pyr_scale: Ratio between consecutive pyramid levels, in (0, 1).
        levels: Maximum number of pyramid levels including the full-resolution image.
        winsize: Averaging window size (odd).
        iterations: Iterations per pyramid level.
        poly_n: Polynomial expansion neighbourhood size (odd).
        poly_sigma: Standard deviation of the Gaussian applicability.
        gaussian_window: Use a Gaussian instead of a box averaging window.
    """

    pyr_scale: float = 0.5
    levels: int = 5
    winsize: int = 11
    iterations: int = 5
    poly_n: int = 5
    poly_sigma: float = 1.1
    gaussian_window: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.pyr_scale < 1.0:
            raise ValueError(f"pyr_scale must lie in (0, 1), got {self.pyr_scale}")
        if self.levels < 1:
            raise ValueError(f"levels must be at least 1, got {self.levels}")
        if self.winsize < 1 or self.winsize % 2 == 0:
            raise ValueError(f"winsize must be a positive odd number, got {self.winsize}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be at least 1, got {self.iterations}")
        if self.poly_n < 3 or self.poly_n % 2 == 0:
            raise ValueError(f"poly_n must be an odd number >= 3, got {self.poly_n}")
        if self.poly_sigma <= 0:
            raise ValueError(f"poly_sigma must be positive, got {self.poly_sigma}")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "FarnebackParams":
        """Create parameters from a dictionary (hyphen or underscore keys).

        Raises:
            ValueError: If a key is unknown or a value violates the invariants.
        """
        known = {f for f in cls.__dataclass_fields__}
        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            name = str(key).replace("-", "_")
            if name not in known:
                raise ValueError(f"Unknown Farneback parameter '{key}'")
            kwargs[name] = value
        return cls(**kwargs)

    @property
    def flags(self) -> int:
        return cv2.OPTFLOW_FARNEBACK_GAUSSIAN if self.gaussian_window else 0


@dataclass(frozen=True)
class FlowField:
    """Horizontal (u) and vertical (v) displacement maps, both H x W float32."""

    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.u.shape != self.v.shape:
            raise DimensionMismatch(f"u has shape {self.u.shape} but v has shape {self.v.shape}")

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.u.shape[0]), int(self.u.shape[1]))

    @classmethod
    def from_array(cls, flow: np.ndarray) -> "FlowField":
        """Split an OpenCV H x W x 2 flow array into its components."""
        return cls(u=np.ascontiguousarray(flow[..., 0]), v=np.ascontiguousarray(flow[..., 1]))

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.u, self.v)


def effective_levels(height: int, width: int, params: FarnebackParams) -> int:
    """
    Cap the pyramid depth so the coarsest level is at least winsize pixels.

    Level L (1-based) has side min(H, W) * pyr_scale**(L - 1).

    Raises:
        ImageTooSmall: If the full-resolution frame is already below winsize.
    """
    side = min(height, width)
    if side < params.winsize:
        raise ImageTooSmall(
            f"Frame {height}x{width} is smaller than the Farneback window {params.winsize}"
        )
    levels = 1
    while levels < params.levels and side * params.pyr_scale**levels >= params.winsize:
        levels += 1
    return levels


def _as_gray(frame: np.ndarray) -> np.ndarray:
    if frame.ndim == 3 and frame.shape[2] == 3:
        frame = cv2.cvtColor(frame, cv2.COLOR_RGB2GRAY)
    if frame.ndim != 2:
        raise DimensionMismatch(f"Expected a grayscale H x W frame, got shape {frame.shape}")
    if frame.dtype != np.uint8:
        frame = np.clip(np.rint(frame), 0, 255).astype(np.uint8)
    return frame


def estimate_flow(
    frame_a: np.ndarray,
    frame_b: np.ndarray,
    params: FarnebackParams | None = None,
) -> FlowField:
    """
    Estimate dense optical flow from frame_a to frame_b.

    Args:
        frame_a: First grayscale frame (H x W, uint8). RGB frames are converted.
        frame_b: Second grayscale frame with the same dimensions.
        params: Estimator parameters; FarnebackParams() when omitted.

    Returns:
        The flow field with frame_a(x) ≈ frame_b(x + flow(x)).

    Raises:
        DimensionMismatch: If the frames differ in size.
        ImageTooSmall: If a frame is smaller than winsize in either dimension.
    """
    params = params or FarnebackParams()
    gray_a = _as_gray(frame_a)
    gray_b = _as_gray(frame_b)
    if gray_a.shape != gray_b.shape:
        raise DimensionMismatch(
            f"Flow frames differ in size: {gray_a.shape} vs {gray_b.shape}"
        )

    height, width = gray_a.shape
    levels = effective_levels(height, width, params)
    if levels < params.levels:
        logger.verbose(
            f"Pyramid capped at {levels} of {params.levels} levels for {height}x{width} frames"
        )

    # OpenCV counts levels beyond the base image
    flow = cv2.calcOpticalFlowFarneback(
        gray_a,
        gray_b,
        None,
        params.pyr_scale,
        levels - 1,
        params.winsize,
        params.iterations,
        params.poly_n,
        params.poly_sigma,
        params.flags,
    )
    if not np.all(np.isfinite(flow)):
        raise FlowError(f"Farneback produced non-finite displacements for {height}x{width} frames")
    return FlowField.from_array(flow)


def endpoint_error(field: FlowField, u: float, v: float, border: int = 0) -> float:
    """Mean endpoint error against a constant ground-truth displacement over the interior."""
    height, width = field.shape
    inner = (slice(border, height - border), slice(border, width - border))
    return float(np.mean(np.hypot(field.u[inner] - u, field.v[inner] - v)))
