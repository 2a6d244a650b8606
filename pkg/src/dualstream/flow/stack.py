"""
Flow normalisation and the 20-channel flow stack.

Displacements are clipped to +/-20 px and mapped linearly onto [0, 255]
(zero motion lands on 127.5). Ten frame pairs are chosen uniformly from the
sampled frames and their normalised u/v maps are interleaved as
[u0, v0, u1, v1, ..., u9, v9]. Centring (subtracting 127.5) is a separate
step applied when the stack is fed to the motion encoder.
"""

from dataclasses import dataclass, field

import numpy as np

from dualstream.core.logging import get_logger
from dualstream.flow.farneback import FarnebackParams, FlowError, FlowField, estimate_flow
from dualstream.videoio import SampledClip, round_uniform, to_gray

logger = get_logger()

FLOW_PAIRS = 10
FLOW_CHANNELS = 2 * FLOW_PAIRS
FLOW_CLIP = 20.0
CENTER_OFFSET = 127.5


class AlreadyCentered(FlowError):
    """Raised when centring (or caching) a stack that has already been centred."""

    pass


@dataclass(frozen=True)
class FlowStack:
    """
    Interleaved normalised flow channels for one clip.

    Attributes:
        channels: float32 array of shape (20, S, S).
        centered: False while values lie in [0, 255]; True after subtracting 127.5.
    """

    channels: np.ndarray = field(repr=False)
    centered: bool = False

    def __post_init__(self) -> None:
        if self.channels.ndim != 3 or self.channels.shape[0] != FLOW_CHANNELS:
            raise FlowError(
                f"Flow stack must have shape ({FLOW_CHANNELS}, S, S), got {self.channels.shape}"
            )

    @property
    def size(self) -> int:
        return int(self.channels.shape[1])

    @property
    def u_channels(self) -> np.ndarray:
        return self.channels[0::2]

    @property
    def v_channels(self) -> np.ndarray:
        return self.channels[1::2]

    def quantized(self) -> "FlowStack":
        """Round to the byte values the cache stores (half-up)."""
        if self.centered:
            raise AlreadyCentered("Only uncentred stacks can be quantized")
        values = np.floor(np.clip(self.channels, 0.0, 255.0) + 0.5).astype(np.float32)
        return FlowStack(channels=values, centered=False)


def normalize_displacement(values: np.ndarray | float) -> np.ndarray:
    """Map displacements (pixels) to [0, 255]: (clip(O, -20, 20) + 20) / 40 * 255."""
    clipped = np.clip(np.asarray(values, dtype=np.float64), -FLOW_CLIP, FLOW_CLIP)
    return (clipped + FLOW_CLIP) / (2 * FLOW_CLIP) * 255.0


def normalize_flow(flow: FlowField) -> tuple[np.ndarray, np.ndarray]:
    """Normalise both components of a flow field to [0, 255] (float64)."""
    return normalize_displacement(flow.u), normalize_displacement(flow.v)


def pair_start_indices(num_frames: int, num_pairs: int = FLOW_PAIRS) -> list[int]:
    """
    Start index of each consecutive frame pair: p_i = round(i * (N - 2) / (K - 1)).

    For N=16, K=10 this is [0, 2, 3, 5, 6, 8, 9, 11, 12, 14].
    """
    if num_frames < 2:
        raise FlowError(f"Need at least 2 sampled frames for a flow pair, got {num_frames}")
    if num_pairs < 2:
        return [0] * num_pairs
    return [round_uniform(i, num_frames - 2, num_pairs - 1) for i in range(num_pairs)]


def build_flow_stack(sampled: SampledClip, params: FarnebackParams | None = None) -> FlowStack:
    """
    Compute the 20-channel uncentred flow stack for a sampled clip.

    Args:
        sampled: The uniformly sampled, resized clip.
        params: Farneback parameters.

    Returns:
        FlowStack with channels interleaved [u0, v0, ..., u9, v9] in [0, 255].

    Raises:
        ImageTooSmall: Propagated from the flow estimator.
    """
    params = params or FarnebackParams()
    starts = pair_start_indices(len(sampled.frames))
    grays: dict[int, np.ndarray] = {}

    def gray(index: int) -> np.ndarray:
        if index not in grays:
            grays[index] = to_gray(sampled.frames[index])
        return grays[index]

    size = sampled.size
    channels = np.empty((FLOW_CHANNELS, size, size), dtype=np.float32)
    mean_magnitudes = []
    for pair, start in enumerate(starts):
        flow = estimate_flow(gray(start), gray(start + 1), params)
        mean_magnitudes.append(float(flow.magnitude().mean()))
        u, v = normalize_flow(flow)
        channels[2 * pair] = u
        channels[2 * pair + 1] = v

    logger.verbose(
        f"Built flow stack from pairs starting at {starts}; mean displacement "
        f"{np.mean(mean_magnitudes):.3f} px"
    )
    return FlowStack(channels=channels, centered=False)


def center_stack(stack: FlowStack) -> FlowStack:
    """
    Subtract 127.5 from every value.

    Raises:
        AlreadyCentered: If the stack is already centred.
    """
    if stack.centered:
        raise AlreadyCentered("Flow stack is already centred")
    return FlowStack(channels=stack.channels - np.float32(CENTER_OFFSET), centered=True)
