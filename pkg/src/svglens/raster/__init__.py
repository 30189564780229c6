from .compare import DiffMap, abs_diff, composite_rgb, luma, mse, ssim
from .coverage import polygon_coverage
from .png_io import (
    load_gray_png,
    load_raster_png,
    raster_to_png_bytes,
    save_gray_png,
    save_raster_png,
)
from .render import (
    DEFAULT_SIZE,
    Layer,
    Raster,
    compose_float,
    compose_layers,
    render,
    render_layers,
    viewbox_to_canvas,
)

__all__ = [
    "DEFAULT_SIZE",
    "DiffMap",
    "Layer",
    "Raster",
    "abs_diff",
    "compose_float",
    "compose_layers",
    "composite_rgb",
    "load_gray_png",
    "load_raster_png",
    "luma",
    "mse",
    "polygon_coverage",
    "raster_to_png_bytes",
    "render",
    "render_layers",
    "save_gray_png",
    "save_raster_png",
    "ssim",
    "viewbox_to_canvas",
]
