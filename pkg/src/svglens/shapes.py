"""Outline geometry for each element kind, in the element's own user space."""

from __future__ import annotations

import math
import re
from typing import TYPE_CHECKING

import numpy as np

from .errors import PathDataError, RenderError
from .geometry import parse_transform
from .pathdata import SubPath, path_to_subpaths, subpaths_control_bbox

if TYPE_CHECKING:  # pragma: no cover
    from .model import VisualElement

# Cubic control offset approximating a quarter circle.
_KAPPA = 0.5522847498307936


def _num(attrs, key: str, default: float = 0.0) -> float:
    value = attrs.get(key)
    if value is None:
        return default
    v = value.strip()
    if v.endswith("px"):
        v = v[:-2]
    try:
        return float(v)
    except ValueError:
        raise RenderError(f"cannot parse attribute {key}={value!r}") from None


def _points_list(value: str) -> np.ndarray:
    nums = [float(t) for t in re.split(r"[\s,]+", value.strip()) if t]
    if len(nums) < 4 or len(nums) % 2:
        raise RenderError(f"invalid points list {value!r}")
    return np.asarray(nums, dtype=np.float64).reshape(-1, 2)


def _polyline_subpath(pts: np.ndarray, closed: bool) -> SubPath:
    sub = SubPath(closed=closed)
    for a, b in zip(pts[:-1], pts[1:]):
        sub.segments.append(np.array([a, b]))
    if closed and not np.array_equal(pts[0], pts[-1]):
        sub.segments.append(np.array([pts[-1], pts[0]]))
    return sub


def _ellipse_subpaths(cx: float, cy: float, rx: float, ry: float) -> list[SubPath]:
    if rx <= 0 or ry <= 0:
        return []
    kx, ky = _KAPPA * rx, _KAPPA * ry
    p = [
        (cx + rx, cy), (cx + rx, cy + ky), (cx + kx, cy + ry), (cx, cy + ry),
        (cx - kx, cy + ry), (cx - rx, cy + ky), (cx - rx, cy),
        (cx - rx, cy - ky), (cx - kx, cy - ry), (cx, cy - ry),
        (cx + kx, cy - ry), (cx + rx, cy - ky), (cx + rx, cy),
    ]
    sub = SubPath(closed=True)
    for i in range(0, 12, 3):
        sub.segments.append(np.array([p[i], p[i + 1], p[i + 2], p[i + 3]]))
    return [sub]


def _rect_subpaths(attrs) -> list[SubPath]:
    x, y = _num(attrs, "x"), _num(attrs, "y")
    w, h = _num(attrs, "width"), _num(attrs, "height")
    if w <= 0 or h <= 0:
        return []
    rx = _num(attrs, "rx", -1.0)
    ry = _num(attrs, "ry", -1.0)
    if rx < 0 and ry < 0:
        pts = np.array([[x, y], [x + w, y], [x + w, y + h], [x, y + h], [x, y]])
        return [_polyline_subpath(pts, closed=True)]
    rx = ry if rx < 0 else rx
    ry = rx if ry < 0 else ry
    rx = min(rx, w / 2.0)
    ry = min(ry, h / 2.0)
    kx, ky = _KAPPA * rx, _KAPPA * ry
    sub = SubPath(closed=True)

    def line(a, b):
        if not np.allclose(a, b):
            sub.segments.append(np.array([a, b]))

    def corner(p0, c1, c2, p1):
        sub.segments.append(np.array([p0, c1, c2, p1]))

    line((x + rx, y), (x + w - rx, y))
    corner((x + w - rx, y), (x + w - rx + kx, y), (x + w, y + ry - ky), (x + w, y + ry))
    line((x + w, y + ry), (x + w, y + h - ry))
    corner((x + w, y + h - ry), (x + w, y + h - ry + ky), (x + w - rx + kx, y + h), (x + w - rx, y + h))
    line((x + w - rx, y + h), (x + rx, y + h))
    corner((x + rx, y + h), (x + rx - kx, y + h), (x, y + h - ry + ky), (x, y + h - ry))
    line((x, y + h - ry), (x, y + ry))
    corner((x, y + ry), (x, y + ry - ky), (x + rx - kx, y), (x + rx, y))
    return [sub]


def _text_subpaths(element: "VisualElement") -> list[SubPath]:
    """Glyph outlines via the bundled DejaVu fonts; deterministic offline."""
    content = element.text or ""
    if not content.strip():
        return []
    from matplotlib.font_manager import FontProperties
    from matplotlib.textpath import TextPath

    attrs = element.attributes
    x, y = _num(attrs, "x"), _num(attrs, "y")
    size = _num(attrs, "font-size", 16.0)
    weight = attrs.get("font-weight", "normal")
    style = attrs.get("font-style", "normal")
    prop = FontProperties(family="DejaVu Sans", weight=weight, style=style)
    tp = TextPath((0, 0), content, size=size, prop=prop)
    verts, codes = tp.vertices, tp.codes
    if len(verts) == 0:
        return []
    anchor = attrs.get("text-anchor", "start")
    width = float(verts[:, 0].max() - min(0.0, float(verts[:, 0].min())))
    shift = {"middle": -width / 2.0, "end": -width}.get(anchor, 0.0)

    def pt(v) -> np.ndarray:
        return np.array([x + shift + v[0], y - v[1]])  # text y-axis points up

    subpaths: list[SubPath] = []
    sub: SubPath | None = None
    pos = np.zeros(2)
    start = np.zeros(2)
    i = 0
    while i < len(codes):
        code = codes[i]
        if code == 1:  # MOVETO
            sub = SubPath()
            subpaths.append(sub)
            pos = pt(verts[i])
            start = pos.copy()
            i += 1
        elif code == 2:  # LINETO
            target = pt(verts[i])
            sub.segments.append(np.array([pos, target]))
            pos = target
            i += 1
        elif code == 3:  # CURVE3 (quadratic)
            q, end = pt(verts[i]), pt(verts[i + 1])
            c1 = pos + 2.0 / 3.0 * (q - pos)
            c2 = end + 2.0 / 3.0 * (q - end)
            sub.segments.append(np.array([pos, c1, c2, end]))
            pos = end
            i += 2
        elif code == 4:  # CURVE4 (cubic)
            c1, c2, end = pt(verts[i]), pt(verts[i + 1]), pt(verts[i + 2])
            sub.segments.append(np.array([pos, c1, c2, end]))
            pos = end
            i += 3
        else:  # CLOSEPOLY
            if sub is not None and not np.array_equal(pos, start):
                sub.segments.append(np.array([pos, start]))
            if sub is not None:
                sub.closed = True
            pos = start.copy()
            i += 1
    return [s for s in subpaths if s.segments]


def element_subpaths(element: "VisualElement") -> list[SubPath]:
    """Outline subpaths in the element's user space (its transform excluded)."""
    kind = element.kind
    attrs = element.attributes
    if kind == "path":
        d = attrs.get("d")
        if not d:
            return []
        try:
            return path_to_subpaths(d)
        except PathDataError as exc:
            raise PathDataError(f"element {element.index} ({element.origin.node_id}): {exc}") from exc
    if kind == "rect":
        return _rect_subpaths(attrs)
    if kind == "circle":
        r = _num(attrs, "r")
        return _ellipse_subpaths(_num(attrs, "cx"), _num(attrs, "cy"), r, r)
    if kind == "ellipse":
        return _ellipse_subpaths(_num(attrs, "cx"), _num(attrs, "cy"),
                                 _num(attrs, "rx"), _num(attrs, "ry"))
    if kind == "line":
        p = np.array([[_num(attrs, "x1"), _num(attrs, "y1")],
                      [_num(attrs, "x2"), _num(attrs, "y2")]])
        if np.array_equal(p[0], p[1]):
            return []
        return [_polyline_subpath(p, closed=False)]
    if kind == "polyline":
        return [_polyline_subpath(_points_list(attrs.get("points", "")), closed=False)]
    if kind == "polygon":
        return [_polyline_subpath(_points_list(attrs.get("points", "")), closed=True)]
    if kind == "text":
        return _text_subpaths(element)
    if kind == "image":
        x, y = _num(attrs, "x"), _num(attrs, "y")
        w, h = _num(attrs, "width"), _num(attrs, "height")
        if w <= 0 or h <= 0:
            return []
        pts = np.array([[x, y], [x + w, y], [x + w, y + h], [x, y + h], [x, y]])
        return [_polyline_subpath(pts, closed=True)]
    if kind == "group-leaf":
        return []  # handled by recursing over children
    raise RenderError(f"no geometry for element kind {kind!r}")


def element_bbox_user(element: "VisualElement") -> tuple[float, float, float, float] | None:
    """Control-point bounding box in document space (element transform applied)."""
    if element.kind == "group-leaf":
        boxes = [b for b in (element_bbox_user(c) for c in element.children) if b is not None]
        if not boxes:
            return None
        return (min(b[0] for b in boxes), min(b[1] for b in boxes),
                max(b[2] for b in boxes), max(b[3] for b in boxes))
    subpaths = element_subpaths(element)
    box = subpaths_control_bbox(subpaths)
    if box is None:
        return None
    tf = parse_transform(element.attributes.get("transform"))
    if tf.is_identity():
        return box
    corners = np.array([[box[0], box[1]], [box[2], box[1]], [box[2], box[3]], [box[0], box[3]]])
    moved = tf.apply(corners)
    return (float(moved[:, 0].min()), float(moved[:, 1].min()),
            float(moved[:, 0].max()), float(moved[:, 1].max()))


def stroke_outline_loops(subpaths: list[SubPath], width: float,
                         flatten_tolerance: float, linecap: str = "butt") -> list[np.ndarray]:
    """Closed loops whose nonzero-rule union is the stroked region.

    Each polyline segment contributes a quad; joints and round caps
    contribute fans. Loops are orientation-normalized so overlapping pieces
    reinforce rather than cancel under the nonzero winding rule.
    """
    from .pathdata import flatten_subpath

    half = width / 2.0
    loops: list[np.ndarray] = []
    for sub in subpaths:
        pts = flatten_subpath(sub, flatten_tolerance)
        keep = np.ones(len(pts), dtype=bool)
        keep[1:] = np.linalg.norm(np.diff(pts, axis=0), axis=1) > 1e-12
        pts = pts[keep]
        if len(pts) < 2:
            continue
        closed = sub.closed
        for a, b in zip(pts[:-1], pts[1:]):
            d = b - a
            n = np.array([-d[1], d[0]])
            n = n / np.linalg.norm(n) * half
            loops.append(_oriented(np.array([a + n, b + n, b - n, a - n])))
        joint_points = pts[1:-1] if not closed else pts
        for p in joint_points:
            loops.append(_oriented(_circle_loop(p, half)))
        if not closed and linecap != "butt":
            for p in (pts[0], pts[-1]):
                if linecap == "round":
                    loops.append(_oriented(_circle_loop(p, half)))
                elif linecap == "square":
                    loops.append(_oriented(_square_cap(pts, p, half)))
    return loops


def _circle_loop(center: np.ndarray, radius: float, n: int = 16) -> np.ndarray:
    t = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    return center + radius * np.stack([np.cos(t), np.sin(t)], axis=1)


def _square_cap(pts: np.ndarray, end: np.ndarray, half: float) -> np.ndarray:
    d = pts[-1] - pts[-2] if np.array_equal(end, pts[-1]) else pts[0] - pts[1]
    d = d / np.linalg.norm(d) * half
    n = np.array([-d[1], d[0]])
    return np.array([end + n, end + n + d, end - n + d, end - n])


def _oriented(loop: np.ndarray) -> np.ndarray:
    """Force counter-clockwise signed area so windings never cancel."""
    x, y = loop[:, 0], loop[:, 1]
    area = np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))
    return loop if area >= 0 else loop[::-1]
