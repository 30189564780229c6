"""SVG path `d` attribute: tokenizing, geometry, and moveto splitting.

The same normalized command stream backs three consumers: the renderer
(absolute curve segments), the subpath splitter (fragment `d` strings that
draw identically in isolation), and bounding-box queries for edits.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import PathDataError
from .geometry import format_number

Command = tuple[str, tuple[float, ...]]

_ARG_COUNTS = {"M": 2, "L": 2, "H": 1, "V": 1, "C": 6, "S": 4, "Q": 4, "T": 2, "A": 7, "Z": 0}
_NUMBER_RE = re.compile(r"[-+]?(?:\d*\.\d+|\d+\.?)(?:[eE][-+]?\d+)?")
_WSP = " \t\r\n,"

# Max line segments when flattening one curve; guards degenerate coordinates.
_MAX_FLATTEN = 512


def tokenize_path(d: str) -> list[Command]:
    """Scan path data into single-group commands.

    Poly-commands are expanded: extra coordinate pairs of a moveto become
    explicit lineto commands of matching relativity, so every returned
    command carries exactly one argument group. Arc flags are scanned as
    single characters, tolerating minified data like `a1 1 0 013 3`.
    """
    cmds: list[Command] = []
    i, n = 0, len(d)
    cur: str | None = None
    first_group = False
    while True:
        while i < n and d[i] in _WSP:
            i += 1
        if i >= n:
            break
        ch = d[i]
        if ch.upper() in _ARG_COUNTS:
            cur = ch
            first_group = True
            i += 1
            if ch in "Zz":
                cmds.append((ch, ()))
                cur = None
                continue
        elif cur is None:
            raise PathDataError(f"expected path command at offset {i}: {d[i:i+12]!r}")
        args, i = _scan_group(d, i, cur)
        if cur in "Mm" and not first_group:
            # Extra coordinate pairs of a moveto are implicit linetos.
            cmds.append(("l" if cur == "m" else "L", args))
        else:
            cmds.append((cur, args))
        first_group = False
    if not cmds:
        raise PathDataError("empty path data")
    if cmds[0][0] not in "Mm":
        raise PathDataError(f"path data must start with a moveto: {d[:12]!r}")
    return cmds


def _scan_group(d: str, i: int, cmd: str) -> tuple[tuple[float, ...], int]:
    count = _ARG_COUNTS[cmd.upper()]
    args: list[float] = []
    for k in range(count):
        while i < len(d) and d[i] in _WSP:
            i += 1
        if cmd in "Aa" and k in (3, 4):
            if i >= len(d) or d[i] not in "01":
                raise PathDataError(f"expected arc flag at offset {i} in {d!r}")
            args.append(float(d[i]))
            i += 1
            continue
        m = _NUMBER_RE.match(d, i)
        if not m:
            raise PathDataError(f"expected number for {cmd!r} at offset {i} in {d!r}")
        args.append(float(m.group(0)))
        i = m.end()
    return tuple(args), i


def serialize_commands(cmds: list[Command]) -> str:
    parts = []
    for letter, args in cmds:
        if letter in "Aa":
            rx, ry, rot, laf, swf, x, y = args
            nums = [format_number(rx), format_number(ry), format_number(rot),
                    str(int(laf)), str(int(swf)), format_number(x), format_number(y)]
        else:
            nums = [format_number(a) for a in args]
        parts.append(letter + (" " + " ".join(nums) if nums else ""))
    return " ".join(parts)


def count_movetos(d: str) -> int:
    return sum(1 for letter, _ in tokenize_path(d) if letter in "Mm")


def split_path_data(d: str) -> list[str]:
    """Split path data at moveto boundaries into standalone fragments.

    Each fragment starts with an absolute moveto at the position the pen
    held in the original path, so relative continuations render at their
    original location. Paths with fewer than two movetos pass through.
    """
    cmds = tokenize_path(d)
    if sum(1 for letter, _ in cmds if letter in "Mm") < 2:
        return [d]
    fragments: list[list[Command]] = []
    current: list[Command] = []
    pos = (0.0, 0.0)
    start = (0.0, 0.0)
    for letter, args in cmds:
        if letter in "Mm":
            if current:
                fragments.append(current)
            if letter == "m":
                target = (pos[0] + args[0], pos[1] + args[1])
            else:
                target = (args[0], args[1])
            current = [("M", target)]
            pos = start = target
            continue
        current.append((letter, args))
        pos, start = _advance(letter, args, pos, start)
    if current:
        fragments.append(current)
    return [serialize_commands(frag) for frag in fragments]


def _advance(letter: str, args: tuple[float, ...], pos: tuple[float, float],
             start: tuple[float, float]) -> tuple[tuple[float, float], tuple[float, float]]:
    """Endpoint of one command, for pen tracking only."""
    rel = letter.islower()
    x, y = pos
    u = letter.upper()
    if u == "Z":
        return start, start
    if u == "H":
        nx = x + args[0] if rel else args[0]
        return (nx, y), start
    if u == "V":
        ny = y + args[0] if rel else args[0]
        return (x, ny), start
    ex, ey = args[-2], args[-1]
    if rel:
        ex, ey = x + ex, y + ey
    return (ex, ey), start


@dataclass
class SubPath:
    """One pen stroke: ordered line/cubic segments plus the closed flag."""

    segments: list[np.ndarray] = field(default_factory=list)
    closed: bool = False

    @property
    def start(self) -> np.ndarray:
        return self.segments[0][0]

    @property
    def end(self) -> np.ndarray:
        return self.segments[-1][-1]


def path_to_subpaths(d: str) -> list[SubPath]:
    """Interpret path data as absolute line/cubic subpaths.

    Quadratics become exact cubics; arcs become cubic approximations split
    at 90-degree sectors. A drawing command after a closepath opens a new
    subpath at the closed subpath's start point, per the SVG pen model.
    """
    return commands_to_subpaths(tokenize_path(d))


def commands_to_subpaths(cmds: list[Command]) -> list[SubPath]:
    subpaths: list[SubPath] = []
    sub: SubPath | None = None
    pos = np.zeros(2)
    start = np.zeros(2)
    prev_cubic_ctrl: np.ndarray | None = None
    prev_quad_ctrl: np.ndarray | None = None

    def open_sub() -> SubPath:
        nonlocal sub
        sub = SubPath()
        subpaths.append(sub)
        return sub

    def need_sub() -> SubPath:
        # Close-then-draw continues from the subpath start without a moveto.
        if sub is None or sub.closed:
            return open_sub()
        return sub

    for letter, args in cmds:
        rel = letter.islower()
        u = letter.upper()
        a = np.asarray(args, dtype=np.float64)

        if u == "M":
            target = pos + a if rel else a.copy()
            open_sub()
            pos = target
            start = target.copy()
        elif u == "Z":
            s = need_sub()
            if not np.array_equal(pos, start):
                s.segments.append(np.array([pos, start]))
            s.closed = True
            pos = start.copy()
        elif u in ("L", "H", "V"):
            if u == "L":
                target = pos + a if rel else a.copy()
            elif u == "H":
                target = np.array([pos[0] + a[0] if rel else a[0], pos[1]])
            else:
                target = np.array([pos[0], pos[1] + a[0] if rel else a[0]])
            need_sub().segments.append(np.array([pos, target]))
            pos = target
        elif u in ("C", "S"):
            if u == "C":
                c1 = pos + a[0:2] if rel else a[0:2]
                c2 = pos + a[2:4] if rel else a[2:4]
                end = pos + a[4:6] if rel else a[4:6]
            else:
                c1 = 2 * pos - prev_cubic_ctrl if prev_cubic_ctrl is not None else pos.copy()
                c2 = pos + a[0:2] if rel else a[0:2]
                end = pos + a[2:4] if rel else a[2:4]
            need_sub().segments.append(np.array([pos, c1, c2, end]))
            prev_cubic_ctrl = c2
            pos = end
        elif u in ("Q", "T"):
            if u == "Q":
                q = pos + a[0:2] if rel else a[0:2]
                end = pos + a[2:4] if rel else a[2:4]
            else:
                q = 2 * pos - prev_quad_ctrl if prev_quad_ctrl is not None else pos.copy()
                end = pos + a if rel else a.copy()
            c1 = pos + 2.0 / 3.0 * (q - pos)
            c2 = end + 2.0 / 3.0 * (q - end)
            need_sub().segments.append(np.array([pos, c1, c2, end]))
            prev_quad_ctrl = q
            pos = end
        elif u == "A":
            rx, ry, rot, large, sweep = a[0], a[1], a[2], bool(a[3]), bool(a[4])
            end = pos + a[5:7] if rel else a[5:7]
            s = need_sub()
            if rx == 0 or ry == 0 or np.array_equal(pos, end):
                if not np.array_equal(pos, end):
                    s.segments.append(np.array([pos, end]))
            else:
                for cubic in _arc_to_cubics(pos, end, rx, ry, rot, large, sweep):
                    s.segments.append(cubic)
            pos = end
        else:  # pragma: no cover - tokenizer rejects unknown letters
            raise PathDataError(f"unsupported command {letter!r}")

        if u not in ("C", "S"):
            prev_cubic_ctrl = None
        if u not in ("Q", "T"):
            prev_quad_ctrl = None

    return [s for s in subpaths if s.segments]


def _arc_to_cubics(p0: np.ndarray, p1: np.ndarray, rx: float, ry: float,
                   rot_deg: float, large: bool, sweep: bool) -> list[np.ndarray]:
    """Endpoint-parameterized elliptical arc as <= 90-degree cubic sectors."""
    rx, ry = abs(rx), abs(ry)
    phi = math.radians(rot_deg % 360.0)
    cos_p, sin_p = math.cos(phi), math.sin(phi)
    rot_inv = np.array([[cos_p, sin_p], [-sin_p, cos_p]])
    rot = rot_inv.T

    mid = (p0 - p1) / 2.0
    x1, y1 = rot_inv @ mid
    # Scale radii up when the endpoints cannot lie on the requested ellipse.
    lam = (x1 / rx) ** 2 + (y1 / ry) ** 2
    if lam > 1.0:
        s = math.sqrt(lam)
        rx *= s
        ry *= s
    num = (rx * ry) ** 2 - (rx * y1) ** 2 - (ry * x1) ** 2
    den = (rx * y1) ** 2 + (ry * x1) ** 2
    coef = math.sqrt(max(0.0, num / den)) if den > 0 else 0.0
    if large == sweep:
        coef = -coef
    cx1 = coef * rx * y1 / ry
    cy1 = -coef * ry * x1 / rx
    center = rot @ np.array([cx1, cy1]) + (p0 + p1) / 2.0

    def angle(vx: float, vy: float) -> float:
        return math.atan2(vy, vx)

    theta1 = angle((x1 - cx1) / rx, (y1 - cy1) / ry)
    theta2 = angle((-x1 - cx1) / rx, (-y1 - cy1) / ry)
    delta = theta2 - theta1
    if sweep and delta < 0:
        delta += 2 * math.pi
    elif not sweep and delta > 0:
        delta -= 2 * math.pi

    n_sectors = max(1, int(math.ceil(abs(delta) / (math.pi / 2.0))))
    cubics = []
    for k in range(n_sectors):
        t0 = theta1 + delta * k / n_sectors
        t1 = theta1 + delta * (k + 1) / n_sectors
        dt = t1 - t0
        alpha = math.sin(dt) * (math.sqrt(4.0 + 3.0 * math.tan(dt / 2.0) ** 2) - 1.0) / 3.0

        def point(t: float) -> np.ndarray:
            return center + rot @ np.array([rx * math.cos(t), ry * math.sin(t)])

        def deriv(t: float) -> np.ndarray:
            return rot @ np.array([-rx * math.sin(t), ry * math.cos(t)])

        q0, q3 = point(t0), point(t1)
        cubics.append(np.array([q0, q0 + alpha * deriv(t0), q3 - alpha * deriv(t1), q3]))
    # Pin the approximation to the exact endpoints.
    cubics[0][0] = p0
    cubics[-1][-1] = p1
    return cubics


def flatten_subpath(sub: SubPath, tolerance: float) -> np.ndarray:
    """Polyline approximation of one subpath within `tolerance` deviation."""
    points = [sub.segments[0][0]]
    for seg in sub.segments:
        if len(seg) == 2:
            points.append(seg[1])
            continue
        p0, c1, c2, p3 = seg
        # Deviation bound for a cubic from its chord; uniform-parameter
        # sampling with n pieces shrinks it by ~n^2.
        u = 3.0 * c1 - 2.0 * p0 - p3
        v = 3.0 * c2 - p0 - 2.0 * p3
        bound2 = max(u[0] ** 2, v[0] ** 2) + max(u[1] ** 2, v[1] ** 2)
        dev = math.sqrt(bound2) / 4.0
        n = int(math.ceil(math.sqrt(dev / max(tolerance, 1e-9)))) if dev > tolerance else 1
        n = min(max(n, 1), _MAX_FLATTEN)
        if n == 1:
            points.append(p3)
        else:
            t = np.linspace(0.0, 1.0, n + 1)[1:, None]
            omt = 1.0 - t
            pts = (omt**3) * p0 + 3 * (omt**2) * t * c1 + 3 * omt * (t**2) * c2 + (t**3) * p3
            points.extend(pts)
    return np.asarray(points, dtype=np.float64)


def subpaths_control_bbox(subpaths: list[SubPath]) -> tuple[float, float, float, float] | None:
    """Bounding box of all control points (contains the true curve bbox)."""
    if not subpaths:
        return None
    pts = np.concatenate([seg for sub in subpaths for seg in sub.segments])
    return (float(pts[:, 0].min()), float(pts[:, 1].min()),
            float(pts[:, 0].max()), float(pts[:, 1].max()))
