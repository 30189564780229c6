"""Image-space comparisons: absolute-difference maps, MSE, SSIM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .render import Raster

_BG_LEVEL = {"white": 1.0, "black": 0.0, "transparent": 0.0}


@dataclass(frozen=True)
class DiffMap:
    """Per-pixel mean absolute RGB difference in [0, 1]."""

    values: np.ndarray  # (height, width) float64

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def mass(self) -> float:
        return float(self.values.sum())


def composite_rgb(raster: Raster, background: str = "white") -> np.ndarray:
    """Float RGB in [0, 1] after compositing onto the given background."""
    level = _BG_LEVEL.get(background)
    if level is None:
        raise ValueError(f"unknown background policy {background!r}")
    px = raster.pixels.astype(np.float64) / 255.0
    alpha = px[..., 3:4]
    return px[..., :3] * alpha + level * (1.0 - alpha)


def _check_dims(a: Raster, b: Raster) -> None:
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError(
            f"dimension mismatch: {a.width}x{a.height} vs {b.width}x{b.height}")


def abs_diff(a: Raster, b: Raster, background: str = "white") -> DiffMap:
    """Pixel difference map: mean of per-channel |RGB| deltas."""
    _check_dims(a, b)
    ra = composite_rgb(a, background)
    rb = composite_rgb(b, background)
    return DiffMap(np.abs(ra - rb).mean(axis=-1))


def mse(a: Raster, b: Raster, background: str = "white") -> float:
    """Mean squared RGB error on unit-normalized channels, in [0, 1]."""
    _check_dims(a, b)
    ra = composite_rgb(a, background)
    rb = composite_rgb(b, background)
    return float(((ra - rb) ** 2).mean())


def luma(rgb: np.ndarray) -> np.ndarray:
    return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]


def _window_sums(values: np.ndarray, window: int) -> np.ndarray:
    """Sliding-window sums at stride 1 via a padded integral image."""
    integral = np.zeros((values.shape[0] + 1, values.shape[1] + 1), dtype=np.float64)
    np.cumsum(np.cumsum(values, axis=0), axis=1, out=integral[1:, 1:])
    w = window
    return (integral[w:, w:] - integral[:-w, w:]
            - integral[w:, :-w] + integral[:-w, :-w])


def ssim(a: Raster, b: Raster, background: str = "white",
         window: int = 8, k1: float = 0.01, k2: float = 0.03) -> float:
    """Structural similarity on luma with uniform windows at stride 1.

    Uses the standard stabilization constants C1 = (k1 L)^2, C2 = (k2 L)^2
    on unit dynamic range; identical inputs score exactly 1.0.
    """
    _check_dims(a, b)
    if a.width < window or a.height < window:
        raise ValueError(f"images smaller than SSIM window ({window})")
    xa = luma(composite_rgb(a, background))
    xb = luma(composite_rgb(b, background))

    n = window * window
    mu_a = _window_sums(xa, window) / n
    mu_b = _window_sums(xb, window) / n
    var_a = _window_sums(xa * xa, window) / n - mu_a**2
    var_b = _window_sums(xb * xb, window) / n - mu_b**2
    cov = _window_sums(xa * xb, window) / n - mu_a * mu_b

    c1 = k1 * k1
    c2 = k2 * k2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float((num / den).mean())
