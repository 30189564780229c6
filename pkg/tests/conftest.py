"""Shared document builders and heatmap fixtures."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from svglens.model import SvgDocument, parse
from svglens.raster import save_gray_png


def svg_doc(body: str, viewbox: str = "0 0 100 100") -> SvgDocument:
    return parse(f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{viewbox}">{body}</svg>')


def grid_doc(n: int, colors: list[str] | None = None) -> SvgDocument:
    """n non-overlapping rects on a regular grid inside a 100x100 viewbox."""
    cols = int(np.ceil(np.sqrt(n)))
    pitch = 100.0 / cols
    side = pitch * 0.6
    palette = colors or ["#c44", "#4c4", "#44c", "#cc4", "#4cc", "#c4c", "#888", "#c84"]
    parts = []
    for i in range(n):
        r, c = divmod(i, cols)
        x = c * pitch + pitch * 0.2
        y = r * pitch + pitch * 0.2
        parts.append(
            f'<rect x="{x:.4f}" y="{y:.4f}" width="{side:.4f}" height="{side:.4f}" '
            f'fill="{palette[i % len(palette)]}"/>')
    return svg_doc("".join(parts))


# Synthetic compound paths exercising relative continuations, curves, arcs,
# closepath handling, and a couple of hole-punching cases that cannot split.
COMPOUND_PATHS: list[tuple[str, str]] = [
    ("two-abs-squares", '<path d="M5 5 h20 v20 h-20 z M55 55 h20 v20 h-20 z" fill="#a33"/>'),
    ("rel-m-continuation", '<path d="M5 5 h20 v20 h-20 z m50 0 h20 v20 h-20 z" fill="#3a3"/>'),
    ("three-rel-squares", '<path d="m10 10 h15 v15 h-15 z m30 0 h15 v15 h-15 z m30 0 h15 v15 h-15 z" fill="#33a"/>'),
    ("open-strokes", '<path d="M10 10 L40 40 M60 10 L90 40" stroke="#333" stroke-width="3" fill="none"/>'),
    ("curves", '<path d="M10 50 C 20 10, 40 10, 50 50 M55 50 C 65 90, 85 90, 95 50" fill="#884"/>'),
    ("quads", '<path d="M10 80 Q 25 40 40 80 M50 80 Q 65 40 80 80" fill="#488"/>'),
    ("smooth-cubic", '<path d="M10 30 C 20 10, 30 10, 40 30 S 60 50, 70 30 M10 70 c 10 -20, 20 -20, 30 0 s 20 20, 30 0" fill="none" stroke="#848" stroke-width="2"/>'),
    ("arcs", '<path d="M20 30 A 15 15 0 0 1 50 30 M20 70 a 15 10 0 0 0 30 0" fill="#596"/>'),
    ("mixed-closed-open", '<path d="M5 5 h25 v25 h-25 z M60 10 l20 20 M60 30 l20 -20" fill="#965" stroke="#222" stroke-width="1.5"/>'),
    ("implicit-lineto-moveto", '<path d="M10 10 30 10 30 30 10 30 z m 50 0 20 0 0 20 -20 0 z" fill="#639"/>'),
    ("vertical-horizontal", '<path d="M10 10 H40 V40 H10 Z M60 60 h30 v30 h-30 z" fill="#936"/>'),
    ("triangle-fan", '<path d="M10 90 L30 50 L50 90 Z M55 90 L75 50 L95 90 Z" fill="#7a4"/>'),
    ("thin-slivers", '<path d="M5 5 L95 8 L5 11 Z M5 60 L95 63 L5 66 Z" fill="#47a"/>'),
    ("rel-lines", '<path d="m20 20 l10 0 l0 10 l-10 0 z m40 40 l12 4 l-4 12 l-12 -4 z" fill="#a74"/>'),
    ("curve-then-line", '<path d="M10 40 C 30 10, 50 10, 70 40 L10 40 M20 70 h50 v15 h-50 z" fill="#5a7"/>'),
    ("exponent-coords", '<path d="M1e1 1e1 h2.0e1 v20 h-20 z M6e1 60 h20 v2e1 h-20 z" fill="#66b"/>'),
    ("negative-rel", '<path d="M40 40 h-25 v-25 h25 z m20 20 h25 v25 h-25 z" fill="#b66"/>'),
    ("five-subpaths", '<path d="M5 5 h12 v12 h-12 z m25 0 h12 v12 h-12 z m25 0 h12 v12 h-12 z M5 60 h12 v12 h-12 z m25 0 h12 v12 h-12 z" fill="#6b6"/>'),
    ("translucent-disjoint", '<path d="M10 10 h25 v25 h-25 z M60 60 h25 v25 h-25 z" fill="#258" fill-opacity="0.5"/>'),
    ("stroked-compound", '<path d="M15 15 h20 v20 h-20 z M60 15 h20 v20 h-20 z" fill="#ddd" stroke="#511" stroke-width="2"/>'),
    # Hole punchers: splitting must fall back for these.
    ("evenodd-donut", '<path fill-rule="evenodd" d="M10 10 h50 v50 h-50 z M25 25 h20 v20 h-20 z" fill="#333"/>'),
    ("nonzero-donut", '<path d="M10 10 h50 v50 h-50 z M25 25 v20 h20 v-20 z" fill="#181"/>'),
]

HOLE_PUNCHER_NAMES = {"evenodd-donut", "nonzero-donut"}


def compound_corpus() -> list[tuple[str, SvgDocument]]:
    return [(name, svg_doc(body)) for name, body in COMPOUND_PATHS]


def write_manifest(directory: Path, concepts: list[dict], render_size: int = 96) -> Path:
    """Write heatmap PNGs plus manifest JSON; returns the manifest path.

    Each concept dict: {"name": str, "candidates": [(values, provider, score), ...]}.
    """
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for concept in concepts:
        candidates = []
        for k, (values, provider, score) in enumerate(concept["candidates"]):
            png_name = f"{concept['name'].replace(' ', '_')}_{k}.png"
            save_gray_png(values, directory / png_name)
            candidates.append({"provider": provider, "score": score, "png": png_name})
        entries.append({"name": concept["name"], "candidates": candidates})
    manifest = {"render_size": render_size, "concepts": entries}
    path = directory / "heatmaps.json"
    path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return path


def half_plane(size: int, axis: str, first_half: bool) -> np.ndarray:
    values = np.zeros((size, size))
    half = size // 2
    if axis == "y":
        region = (slice(0, half), slice(None)) if first_half else (slice(half, None), slice(None))
    else:
        region = (slice(None), slice(0, half)) if first_half else (slice(None), slice(half, None))
    values[region] = 1.0
    return values


@pytest.fixture
def three_rect_doc() -> SvgDocument:
    return svg_doc(
        '<rect x="8" y="8" width="24" height="24" fill="red"/>'
        '<rect x="60" y="8" width="24" height="24" fill="blue"/>'
        '<rect x="8" y="60" width="24" height="24" fill="green"/>')


def separable_record(seed: int) -> tuple[SvgDocument, SvgDocument, tuple[int, ...]]:
    """Pale clean grid plus three large dark blobs at seeded z-positions.

    Constructed so leave-one-out deltas separate cleanly: clean elements are
    pale (small positive deltas), blobs are dark and big (clearly negative).
    Returns (clean_doc, injected_doc, truth_indices).
    """
    rng = np.random.default_rng(seed)
    n_clean = int(rng.integers(7, 13))
    pale = ["#eedddd", "#ddeedd", "#ddddee", "#eeeedd", "#ddeeee"]
    cols = int(np.ceil(np.sqrt(n_clean)))
    pitch = 100.0 / cols
    bodies = []
    for i in range(n_clean):
        r, c = divmod(i, cols)
        x = c * pitch + pitch * 0.25
        y = r * pitch + pitch * 0.25
        side = pitch * 0.5
        bodies.append(f'<rect x="{x:.3f}" y="{y:.3f}" width="{side:.3f}" '
                      f'height="{side:.3f}" fill="{pale[i % len(pale)]}"/>')
    clean = svg_doc("".join(bodies))

    truth: list[int] = []
    for _ in range(3):
        w = float(rng.uniform(20, 35))
        h = float(rng.uniform(20, 35))
        x = float(rng.uniform(0, 100 - w))
        y = float(rng.uniform(0, 100 - h))
        color = "#{:02x}{:02x}{:02x}".format(*(int(v) for v in rng.integers(0, 90, 3)))
        if rng.integers(0, 2) == 0:
            blob = (f'<rect x="{x:.3f}" y="{y:.3f}" width="{w:.3f}" '
                    f'height="{h:.3f}" fill="{color}"/>')
        else:
            blob = (f'<ellipse cx="{x + w / 2:.3f}" cy="{y + h / 2:.3f}" '
                    f'rx="{w / 2:.3f}" ry="{h / 2:.3f}" fill="{color}"/>')
        position = int(rng.integers(0, len(bodies) + 1))
        bodies.insert(position, blob)
        truth = [t + 1 if t >= position else t for t in truth]
        truth.append(position)
    return clean, svg_doc("".join(bodies)), tuple(sorted(truth))
