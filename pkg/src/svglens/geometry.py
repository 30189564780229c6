"""2D affine transforms and the SVG `transform` attribute grammar."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import SvgParseError

_NUMBER_RE = re.compile(r"[-+]?(?:\d*\.\d+|\d+\.?)(?:[eE][-+]?\d+)?")
_TRANSFORM_RE = re.compile(r"(matrix|translate|scale|rotate|skewX|skewY)\s*\(([^)]*)\)")


def format_number(x: float) -> str:
    """Shortest exact decimal form: integers lose the trailing `.0`."""
    f = float(x)
    if f == int(f) and abs(f) < 1e16:
        return str(int(f))
    return repr(f)


@dataclass(frozen=True)
class Affine:
    """Affine map in SVG order: x' = a*x + c*y + e, y' = b*x + d*y + f."""

    a: float = 1.0
    b: float = 0.0
    c: float = 0.0
    d: float = 1.0
    e: float = 0.0
    f: float = 0.0

    @classmethod
    def identity(cls) -> "Affine":
        return cls()

    @classmethod
    def translation(cls, tx: float, ty: float) -> "Affine":
        return cls(1.0, 0.0, 0.0, 1.0, tx, ty)

    @classmethod
    def scaling(cls, sx: float, sy: float | None = None) -> "Affine":
        sy = sx if sy is None else sy
        return cls(sx, 0.0, 0.0, sy, 0.0, 0.0)

    @classmethod
    def rotation(cls, degrees: float, cx: float = 0.0, cy: float = 0.0) -> "Affine":
        t = math.radians(degrees)
        cos_t, sin_t = math.cos(t), math.sin(t)
        rot = cls(cos_t, sin_t, -sin_t, cos_t, 0.0, 0.0)
        if cx == 0.0 and cy == 0.0:
            return rot
        return cls.translation(cx, cy) @ rot @ cls.translation(-cx, -cy)

    def __matmul__(self, other: "Affine") -> "Affine":
        """Composition: (self @ other) applies `other` first."""
        return Affine(
            self.a * other.a + self.c * other.b,
            self.b * other.a + self.d * other.b,
            self.a * other.c + self.c * other.d,
            self.b * other.c + self.d * other.d,
            self.a * other.e + self.c * other.f + self.e,
            self.b * other.e + self.d * other.f + self.f,
        )

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform an (..., 2) array of points."""
        pts = np.asarray(points, dtype=np.float64)
        m = np.array([[self.a, self.c], [self.b, self.d]])
        return pts @ m.T + np.array([self.e, self.f])

    def apply_point(self, x: float, y: float) -> tuple[float, float]:
        return (self.a * x + self.c * y + self.e, self.b * x + self.d * y + self.f)

    def determinant(self) -> float:
        return self.a * self.d - self.b * self.c

    def inverse(self) -> "Affine":
        det = self.determinant()
        if abs(det) < 1e-12:
            raise ValueError("singular transform has no inverse")
        ia, ib = self.d / det, -self.b / det
        ic, id_ = -self.c / det, self.a / det
        return Affine(ia, ib, ic, id_, -(ia * self.e + ic * self.f), -(ib * self.e + id_ * self.f))

    def scale_factor(self) -> float:
        """Isotropic scale estimate: sqrt(|det|)."""
        return math.sqrt(abs(self.determinant()))

    def is_identity(self) -> bool:
        return self == Affine.identity()

    def to_svg(self) -> str:
        parts = (self.a, self.b, self.c, self.d, self.e, self.f)
        return "matrix(" + " ".join(format_number(v) for v in parts) + ")"


def parse_transform(value: str | None) -> Affine:
    """Parse an SVG transform list into a single composed Affine."""
    if not value or not value.strip():
        return Affine.identity()
    result = Affine.identity()
    matched_span = 0
    for m in _TRANSFORM_RE.finditer(value):
        matched_span += len(m.group(0))
        name = m.group(1)
        args = [float(v) for v in _NUMBER_RE.findall(m.group(2))]
        result = result @ _single_transform(name, args, value)
    # Anything other than whitespace/commas between the function calls is an error.
    leftover = _TRANSFORM_RE.sub("", value).strip(" ,\t\r\n")
    if leftover:
        raise SvgParseError(f"unrecognized transform content: {leftover!r}")
    return result


def _single_transform(name: str, args: list[float], source: str) -> Affine:
    if name == "matrix":
        if len(args) != 6:
            raise SvgParseError(f"matrix() expects 6 numbers: {source!r}")
        return Affine(*args)
    if name == "translate":
        if len(args) == 1:
            return Affine.translation(args[0], 0.0)
        if len(args) == 2:
            return Affine.translation(args[0], args[1])
        raise SvgParseError(f"translate() expects 1 or 2 numbers: {source!r}")
    if name == "scale":
        if len(args) == 1:
            return Affine.scaling(args[0])
        if len(args) == 2:
            return Affine.scaling(args[0], args[1])
        raise SvgParseError(f"scale() expects 1 or 2 numbers: {source!r}")
    if name == "rotate":
        if len(args) == 1:
            return Affine.rotation(args[0])
        if len(args) == 3:
            return Affine.rotation(args[0], args[1], args[2])
        raise SvgParseError(f"rotate() expects 1 or 3 numbers: {source!r}")
    if name == "skewX":
        if len(args) != 1:
            raise SvgParseError(f"skewX() expects 1 number: {source!r}")
        return Affine(1.0, 0.0, math.tan(math.radians(args[0])), 1.0, 0.0, 0.0)
    if name == "skewY":
        if len(args) != 1:
            raise SvgParseError(f"skewY() expects 1 number: {source!r}")
        return Affine(1.0, math.tan(math.radians(args[0])), 0.0, 1.0, 0.0, 0.0)
    raise SvgParseError(f"unknown transform function {name!r}")


def bbox_union(boxes: list[tuple[float, float, float, float]]) -> tuple[float, float, float, float]:
    """Union of (x0, y0, x1, y1) boxes; raises on empty input."""
    if not boxes:
        raise ValueError("no boxes to union")
    arr = np.array(boxes, dtype=np.float64)
    return (
        float(arr[:, 0].min()),
        float(arr[:, 1].min()),
        float(arr[:, 2].max()),
        float(arr[:, 3].max()),
    )
