"""Diagnostic flow images: HSV map, normalised u/v components and a quiver overlay."""

from pathlib import Path

import cv2
import numpy as np

from dualstream.flow.farneback import FlowField
from dualstream.flow.stack import normalize_flow
from dualstream.videoio import write_frame


def flow_to_hsv(flow: FlowField, max_magnitude: float | None = None) -> np.ndarray:
    """
    Encode a flow field as an RGB image: hue = direction, brightness = magnitude.

    Args:
        flow: The flow field.
        max_magnitude: Magnitude mapped to full brightness; the field maximum when None.

    Returns:
        H x W x 3 uint8 RGB image.
    """
    magnitude, angle = cv2.cartToPolar(
        flow.u.astype(np.float32), flow.v.astype(np.float32), angleInDegrees=True
    )
    scale = max_magnitude if max_magnitude is not None else float(magnitude.max())
    hsv = np.zeros((*flow.shape, 3), dtype=np.uint8)
    hsv[..., 0] = (angle / 2).astype(np.uint8)
    hsv[..., 1] = 255
    if scale > 0:
        hsv[..., 2] = np.clip(magnitude / scale * 255.0, 0, 255).astype(np.uint8)
    return cv2.cvtColor(hsv, cv2.COLOR_HSV2RGB)


def flow_components(flow: FlowField) -> tuple[np.ndarray, np.ndarray]:
    """The normalised u and v maps as 8-bit grayscale images."""
    u, v = normalize_flow(flow)
    return np.floor(u + 0.5).astype(np.uint8), np.floor(v + 0.5).astype(np.uint8)


def quiver_overlay(
    frame: np.ndarray, flow: FlowField, step: int = 8, scale: float = 2.0
) -> np.ndarray:
    """Draw displacement arrows on a copy of an RGB frame every `step` pixels."""
    canvas = np.ascontiguousarray(frame.copy())
    height, width = flow.shape
    for y in range(step // 2, height, step):
        for x in range(step // 2, width, step):
            dx = float(flow.u[y, x]) * scale
            dy = float(flow.v[y, x]) * scale
            if dx * dx + dy * dy < 0.25:
                continue
            tip = (int(round(x + dx)), int(round(y + dy)))
            cv2.arrowedLine(canvas, (x, y), tip, (255, 64, 0), 1, cv2.LINE_AA, tipLength=0.3)
    return canvas


def write_flow_visualizations(
    flow: FlowField,
    frame: np.ndarray,
    out_dir: Path | str,
    stem: str,
) -> list[Path]:
    """
    Write <stem>_hsv.png, <stem>_u.png, <stem>_v.png and <stem>_quiver.png.

    Returns:
        The written paths.
    """
    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    u_img, v_img = flow_components(flow)
    outputs = {
        "hsv": flow_to_hsv(flow),
        "u": cv2.cvtColor(u_img, cv2.COLOR_GRAY2RGB),
        "v": cv2.cvtColor(v_img, cv2.COLOR_GRAY2RGB),
        "quiver": quiver_overlay(frame, flow),
    }
    paths = []
    for kind, image in outputs.items():
        path = directory / f"{stem}_{kind}.png"
        write_frame(path, image)
        paths.append(path)
    return paths
