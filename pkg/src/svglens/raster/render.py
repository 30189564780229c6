"""Deterministic rasterization of documents to RGBA rasters.

Each element rasterizes independently to a premultiplied float layer; layers
compose in paint order with the standard over operator. Determinism is the
contract: same document, same size, same policy, bit-identical buffer.
"""

from __future__ import annotations

import base64
import hashlib
import io
import re
from dataclasses import dataclass, field

import numpy as np

from ..colors import parse_color
from ..errors import PathDataError, RenderError
from ..geometry import Affine
from ..model import Gradient, SvgDocument, VisualElement
from ..pathdata import SubPath, flatten_subpath, subpaths_control_bbox
from ..shapes import element_subpaths, stroke_outline_loops
from .coverage import polygon_coverage

DEFAULT_SIZE = 384
FLATTEN_TOL = 0.2  # device px

_URL_RE = re.compile(r"url\(\s*#([^)\s]+)\s*\)")


@dataclass(frozen=True)
class Raster:
    """Straight-alpha RGBA8 image plus the policy that produced it."""

    width: int
    height: int
    pixels: np.ndarray  # (height, width, 4) uint8
    background: str = "white"
    premultiplied: bool = False

    def sha256(self) -> str:
        return hashlib.sha256(self.pixels.tobytes()).hexdigest()


@dataclass
class Layer:
    x0: int
    y0: int
    data: np.ndarray  # (h, w, 4) float64, premultiplied


def viewbox_to_canvas(viewbox: tuple[float, float, float, float], size: int) -> Affine:
    """Uniform fit of the viewbox into a centered size x size canvas."""
    vx, vy, vw, vh = viewbox
    s = size / max(vw, vh)
    tx = (size - s * vw) / 2.0 - s * vx
    ty = (size - s * vh) / 2.0 - s * vy
    return Affine(s, 0.0, 0.0, s, tx, ty)


def _over(dst: np.ndarray, src: np.ndarray) -> np.ndarray:
    return src + dst * (1.0 - src[..., 3:4])


def _blend_into(canvas: np.ndarray, layer: Layer) -> None:
    h, w = layer.data.shape[:2]
    region = canvas[layer.y0:layer.y0 + h, layer.x0:layer.x0 + w]
    region[...] = _over(region, layer.data)


def render_layers(doc: SvgDocument, size: int = DEFAULT_SIZE) -> list[Layer | None]:
    """One premultiplied layer per element, independent of its neighbors."""
    root = viewbox_to_canvas(doc.viewbox, size)
    return [_element_layer(e, root, doc.statics.paint_servers, size) for e in doc.elements]


def compose_float(layers: list[Layer | None], size: int) -> np.ndarray:
    """Premultiplied float canvas; compose_layers quantizes this."""
    canvas = np.zeros((size, size, 4), dtype=np.float64)
    for layer in layers:
        if layer is not None:
            _blend_into(canvas, layer)
    return canvas


def compose_layers(layers: list[Layer | None], size: int, background: str = "white") -> Raster:
    canvas = compose_float(layers, size)
    alpha = canvas[..., 3:4]
    if background == "white":
        rgb = canvas[..., :3] + (1.0 - alpha)
        out = np.concatenate([rgb, np.ones_like(alpha)], axis=-1)
    elif background == "black":
        out = np.concatenate([canvas[..., :3], np.ones_like(alpha)], axis=-1)
    elif background == "transparent":
        safe = np.where(alpha > 0.0, alpha, 1.0)
        out = np.concatenate([canvas[..., :3] / safe, alpha], axis=-1)
    else:
        raise RenderError(f"unknown background policy {background!r}")
    pixels = np.clip(np.rint(out * 255.0), 0.0, 255.0).astype(np.uint8)
    return Raster(width=size, height=size, pixels=pixels, background=background)


def render(doc: SvgDocument, size: int = DEFAULT_SIZE, background: str = "white") -> Raster:
    """Deterministic raster of the whole document."""
    return compose_layers(render_layers(doc, size), size, background)


# ---------------------------------------------------------------------------
# Per-element rasterization
# ---------------------------------------------------------------------------

def _element_layer(element: VisualElement, root: Affine,
                   paint_servers, size: int) -> Layer | None:
    try:
        return _element_layer_inner(element, root, paint_servers, size)
    except (PathDataError, RenderError):
        raise
    except (ValueError, ArithmeticError) as exc:
        raise RenderError(
            f"element {element.index} ({element.origin.node_id}): {exc}") from exc


def _element_layer_inner(element: VisualElement, root: Affine,
                         paint_servers, size: int) -> Layer | None:
    if element.kind == "group-leaf":
        sublayers = [_element_layer(c, root, paint_servers, size) for c in element.children]
        return _merge_layers([l for l in sublayers if l is not None])

    attrs = element.attributes
    tf = root @ _element_transform(element)
    opacity = _opt_float(attrs.get("opacity"), 1.0)
    if opacity <= 0.0:
        return None

    if element.kind == "image":
        return _image_layer(element, tf, size, opacity)

    subpaths = element_subpaths(element)
    if not subpaths:
        return None

    fill_default = None if element.kind == "line" else "black"
    fill = _resolve_paint(attrs.get("fill", fill_default), paint_servers, element)
    stroke = _resolve_paint(attrs.get("stroke", "none"), paint_servers, element)

    fill_layer = None
    if fill is not None:
        rule = "evenodd" if attrs.get("fill-rule") == "evenodd" else "nonzero"
        loops = [flatten_subpath(_transform_subpath(sub, tf), FLATTEN_TOL) for sub in subpaths]
        cov = polygon_coverage(loops, size, size, rule)
        if cov is not None:
            alpha_factor = _opt_float(attrs.get("fill-opacity"), 1.0)
            fill_layer = _paint_layer(cov, fill, alpha_factor, tf, subpaths)

    stroke_layer = None
    if stroke is not None:
        width = _opt_float(attrs.get("stroke-width"), 1.0)
        if width > 0.0:
            scale = max(tf.scale_factor(), 1e-9)
            cap = attrs.get("stroke-linecap", "butt")
            loops_user = stroke_outline_loops(subpaths, width, FLATTEN_TOL / scale, cap)
            loops = [tf.apply(lp) for lp in loops_user]
            cov = polygon_coverage(loops, size, size, "nonzero")
            if cov is not None:
                alpha_factor = _opt_float(attrs.get("stroke-opacity"), 1.0)
                stroke_layer = _paint_layer(cov, stroke, alpha_factor, tf, subpaths)

    combined = _merge_layers([l for l in (fill_layer, stroke_layer) if l is not None])
    if combined is None:
        return None
    if opacity < 1.0:
        combined.data *= opacity
    return combined


def _element_transform(element: VisualElement) -> Affine:
    from ..geometry import parse_transform

    return parse_transform(element.attributes.get("transform"))


def _transform_subpath(sub: SubPath, tf: Affine) -> SubPath:
    return SubPath(segments=[tf.apply(seg) for seg in sub.segments], closed=sub.closed)


def _opt_float(value: str | None, default: float) -> float:
    if value is None:
        return default
    v = value.strip()
    if v.endswith("px"):
        v = v[:-2]
    return float(v)


def _resolve_paint(value: str | None, paint_servers, element: VisualElement):
    """None (no paint), ("color", rgba), or ("gradient", Gradient)."""
    if value is None:
        return None
    v = value.strip()
    m = _URL_RE.match(v)
    if m:
        grad = paint_servers.get(m.group(1))
        if grad is None:
            raise RenderError(
                f"element {element.index} ({element.origin.node_id}): "
                f"unknown paint server #{m.group(1)}")
        return ("gradient", grad)
    try:
        color = parse_color(v)
    except RenderError as exc:
        raise RenderError(
            f"element {element.index} ({element.origin.node_id}): {exc}") from exc
    if color is None:
        return None
    return ("color", color)


def _merge_layers(layers: list[Layer]) -> Layer | None:
    layers = [l for l in layers if l is not None and l.data.size]
    if not layers:
        return None
    if len(layers) == 1:
        return layers[0]
    x0 = min(l.x0 for l in layers)
    y0 = min(l.y0 for l in layers)
    x1 = max(l.x0 + l.data.shape[1] for l in layers)
    y1 = max(l.y0 + l.data.shape[0] for l in layers)
    merged = np.zeros((y1 - y0, x1 - x0, 4), dtype=np.float64)
    for l in layers:
        h, w = l.data.shape[:2]
        region = merged[l.y0 - y0:l.y0 - y0 + h, l.x0 - x0:l.x0 - x0 + w]
        region[...] = _over(region, l.data)
    return Layer(x0, y0, merged)


def _paint_layer(cov: tuple[np.ndarray, tuple[int, int]], paint, alpha_factor: float,
                 tf: Affine, subpaths_user: list[SubPath]) -> Layer | None:
    coverage, (x0, y0) = cov
    kind, payload = paint
    if kind == "color":
        r, g, b, a = payload
        alpha = coverage * (a * alpha_factor)
        data = np.empty((*coverage.shape, 4), dtype=np.float64)
        data[..., 0] = r * alpha
        data[..., 1] = g * alpha
        data[..., 2] = b * alpha
        data[..., 3] = alpha
        return Layer(x0, y0, data)
    colors = _gradient_colors(payload, tf, subpaths_user, coverage.shape, (x0, y0))
    alpha = colors[..., 3] * coverage * alpha_factor
    data = np.empty((*coverage.shape, 4), dtype=np.float64)
    data[..., :3] = colors[..., :3] * alpha[..., None]
    data[..., 3] = alpha
    return Layer(x0, y0, data)


def _gradient_colors(grad: Gradient, tf: Affine, subpaths_user: list[SubPath],
                     shape: tuple[int, int], offset: tuple[int, int]) -> np.ndarray:
    """Straight-alpha RGBA per pixel center of the coverage window."""
    h, w = shape
    x0, y0 = offset
    ys, xs = np.mgrid[0:h, 0:w]
    device = np.stack([xs + x0 + 0.5, ys + y0 + 0.5], axis=-1).reshape(-1, 2)
    user = tf.inverse().apply(device)

    if grad.units == "userSpaceOnUse":
        pts = user
    else:
        box = subpaths_control_bbox(subpaths_user)
        if box is None:
            pts = user
        else:
            bw = max(box[2] - box[0], 1e-12)
            bh = max(box[3] - box[1], 1e-12)
            pts = (user - np.array([box[0], box[1]])) / np.array([bw, bh])
    if not grad.transform.is_identity():
        pts = grad.transform.inverse().apply(pts)

    if grad.kind == "linear":
        p1 = np.array([grad.coord("x1", 0.0), grad.coord("y1", 0.0)])
        p2 = np.array([grad.coord("x2", 1.0), grad.coord("y2", 0.0)])
        d = p2 - p1
        denom = float(d @ d)
        t = np.zeros(len(pts)) if denom == 0 else ((pts - p1) @ d) / denom
    else:
        center = np.array([grad.coord("cx", 0.5), grad.coord("cy", 0.5)])
        radius = max(grad.coord("r", 0.5), 1e-12)
        t = np.linalg.norm(pts - center, axis=1) / radius
    t = np.clip(t, 0.0, 1.0)

    if not grad.stops:
        rgba = np.zeros((len(t), 4))
    elif len(grad.stops) == 1:
        rgba = np.tile(np.array(grad.stops[0].color), (len(t), 1))
    else:
        offsets = np.array([s.offset for s in grad.stops])
        channels = np.array([s.color for s in grad.stops])  # (S, 4)
        rgba = np.stack([np.interp(t, offsets, channels[:, c]) for c in range(4)], axis=-1)
    return rgba.reshape(h, w, 4)


def _image_layer(element: VisualElement, tf: Affine, size: int, opacity: float) -> Layer | None:
    from PIL import Image

    attrs = element.attributes
    href = attrs.get("href", "")
    if not href.startswith("data:"):
        raise RenderError(
            f"element {element.index} ({element.origin.node_id}): "
            "only data: URIs are supported for images")
    try:
        payload = href.split(",", 1)[1]
        raw = base64.b64decode(payload)
        img = Image.open(io.BytesIO(raw)).convert("RGBA")
    except Exception as exc:
        raise RenderError(
            f"element {element.index} ({element.origin.node_id}): "
            f"cannot decode embedded image: {exc}") from exc
    src = np.asarray(img, dtype=np.float64) / 255.0
    src[..., :3] *= src[..., 3:4]  # premultiply

    subpaths = element_subpaths(element)
    if not subpaths:
        return None
    loops = [flatten_subpath(_transform_subpath(sub, tf), FLATTEN_TOL) for sub in subpaths]
    cov = polygon_coverage(loops, size, size, "nonzero")
    if cov is None:
        return None
    coverage, (x0, y0) = cov
    h, w = coverage.shape

    x = _opt_float(attrs.get("x"), 0.0)
    y = _opt_float(attrs.get("y"), 0.0)
    rw = _opt_float(attrs.get("width"), 0.0)
    rh = _opt_float(attrs.get("height"), 0.0)
    ys, xs = np.mgrid[0:h, 0:w]
    device = np.stack([xs + x0 + 0.5, ys + y0 + 0.5], axis=-1).reshape(-1, 2)
    user = tf.inverse().apply(device)
    u = (user[:, 0] - x) / rw * src.shape[1] - 0.5
    v = (user[:, 1] - y) / rh * src.shape[0] - 0.5
    sampled = _bilinear_sample(src, u, v).reshape(h, w, 4)
    data = sampled * (coverage * opacity)[..., None]
    return Layer(x0, y0, data)


def _bilinear_sample(img: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    hh, ww = img.shape[:2]
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, ww - 1)
    y0 = np.clip(np.floor(ys).astype(np.int64), 0, hh - 1)
    x1 = np.clip(x0 + 1, 0, ww - 1)
    y1 = np.clip(y0 + 1, 0, hh - 1)
    fx = np.clip(xs - x0, 0.0, 1.0)[..., None]
    fy = np.clip(ys - y0, 0.0, 1.0)[..., None]
    top = img[y0, x0] * (1 - fx) + img[y0, x1] * fx
    bottom = img[y1, x0] * (1 - fx) + img[y1, x1] * fx
    return top * (1 - fy) + bottom * fy
