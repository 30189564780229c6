"""Shared image fixtures for the sidecar tests."""

from __future__ import annotations

import io

import numpy as np
from PIL import Image


def png_bytes(rgb_array: np.ndarray) -> bytes:
    img = Image.fromarray(rgb_array.astype(np.uint8), mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def two_region_image(size: int = 120) -> np.ndarray:
    """White background, red block upper-left, blue block lower-right."""
    rgb = np.full((size, size, 3), 255, dtype=np.uint8)
    rgb[10:50, 10:50] = (220, 40, 40)
    rgb[70:110, 70:110] = (40, 40, 220)
    return rgb


def blank_image(size: int = 64) -> np.ndarray:
    return np.full((size, size, 3), 255, dtype=np.uint8)
