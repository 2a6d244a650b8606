"""Textured test images with known translations."""

import cv2
import numpy as np


def textured_canvas(size: int, seed: int = 0) -> np.ndarray:
    """Smooth random grayscale texture spanning most of the byte range."""
    rng = np.random.default_rng(seed)
    noise = rng.random((size, size)).astype(np.float32)
    smooth = cv2.GaussianBlur(noise, (0, 0), 2.0)
    smooth = (smooth - smooth.min()) / (smooth.max() - smooth.min())
    return (smooth * 255.0).astype(np.uint8)


def translated_pair(
    shift: tuple[int, int], size: int = 64, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Frames a and b where the content of b is the content of a moved by (dx, dy)."""
    dx, dy = shift
    margin = 16
    canvas = textured_canvas(size + 2 * margin, seed)
    frame_a = canvas[margin : margin + size, margin : margin + size]
    frame_b = canvas[margin - dy : margin - dy + size, margin - dx : margin - dx + size]
    return np.ascontiguousarray(frame_a), np.ascontiguousarray(frame_b)


def translating_frames(
    count: int, shift: tuple[int, int], size: int = 64, seed: int = 0
) -> list[np.ndarray]:
    """RGB frames whose content moves by (dx, dy) per frame."""
    dx, dy = shift
    margin = max(abs(dx), abs(dy)) * count + 4
    canvas = textured_canvas(size + 2 * margin, seed)
    frames = []
    for t in range(count):
        y0, x0 = margin - dy * t, margin - dx * t
        gray = canvas[y0 : y0 + size, x0 : x0 + size]
        frames.append(np.ascontiguousarray(np.repeat(gray[..., None], 3, axis=2)))
    return frames
