"""PNG import/export for rasters, footprints, and heatmaps."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import SvgLensError
from .render import Raster


def raster_to_png_bytes(raster: Raster) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(raster.pixels, mode="RGBA").save(buf, format="PNG")
    return buf.getvalue()


def save_raster_png(raster: Raster, path: str | Path) -> None:
    Path(path).write_bytes(raster_to_png_bytes(raster))


def load_raster_png(path: str | Path, background: str = "white") -> Raster:
    try:
        img = Image.open(path).convert("RGBA")
    except FileNotFoundError:
        raise SvgLensError(f"reference image not found: {path}") from None
    except Exception as exc:
        raise SvgLensError(f"cannot read PNG {path}: {exc}") from exc
    pixels = np.asarray(img, dtype=np.uint8)
    return Raster(width=img.width, height=img.height, pixels=pixels, background=background)


def save_gray_png(values: np.ndarray, path: str | Path) -> None:
    """Write a [0, 1] float map as an 8-bit grayscale PNG."""
    data = np.clip(np.rint(values * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(data, mode="L").save(path, format="PNG")


def load_gray_png(path: str | Path) -> np.ndarray:
    """Read an 8-bit grayscale PNG back to floats in [0, 1]."""
    try:
        img = Image.open(path).convert("L")
    except FileNotFoundError:
        raise SvgLensError(f"heatmap image not found: {path}") from None
    except Exception as exc:
        raise SvgLensError(f"cannot read PNG {path}: {exc}") from exc
    if img.width == 0 or img.height == 0:
        raise SvgLensError(f"empty image {path}")
    return np.asarray(img, dtype=np.float64) / 255.0
