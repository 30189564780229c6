"""Composed document pipelines shared by the CLI and the labs."""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

import numpy as np

from .attribution import AttributionMatrix, attribute
from .concepts import ConceptSet, fuse, load_heatmaps
from .config import RunConfig
from .errors import SvgLensError
from .model import SvgDocument, VisualElement, parse, split_subpaths
from .raster import Raster, compose_float, load_raster_png, render, render_layers
from .scoring import LooResult, compute_footprints, loo_analyze, make_backend

# Mean premultiplied-RGBA deviation over an element's own support above
# which a subpath split is rejected as not render-equivalent.
SPLIT_SUPPORT_TOLERANCE = 0.02


def make_split_verifier(doc: SvgDocument, size: int = 128):
    """Render-diff check comparing a path against its split fragments."""

    def verifier(parent: VisualElement, fragments: list[VisualElement]) -> bool:
        base = replace(doc, elements=(replace(parent, index=0),), source="")
        frags = replace(
            doc, source="",
            elements=tuple(replace(f, index=i) for i, f in enumerate(fragments)))
        original = compose_float(render_layers(base, size), size)
        split = compose_float(render_layers(frags, size), size)
        support = (original[..., 3] > 0) | (split[..., 3] > 0)
        covered = int(support.sum())
        if covered == 0:
            return True
        deviation = np.abs(original - split).mean(axis=-1)[support].mean()
        return float(deviation) <= SPLIT_SUPPORT_TOLERANCE

    return verifier


def split_verified(doc: SvgDocument, size: int = 128) -> SvgDocument:
    """Split compound paths, falling back per path when rendering changes."""
    return split_subpaths(doc, verifier=make_split_verifier(doc, size))


def load_document(path: str | Path) -> SvgDocument:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SvgLensError(f"cannot read SVG file {path}: {exc}") from exc
    return parse(text)


def load_reference(path: str | Path, config: RunConfig) -> Raster:
    """Reference raster from a PNG or an SVG (rendered at config size)."""
    p = Path(path)
    if p.suffix.lower() == ".svg":
        return render(load_document(p), config.render_size, config.background)
    raster = load_raster_png(p, config.background)
    if (raster.width, raster.height) != (config.render_size, config.render_size):
        from .concepts import bilinear_resize

        channels = [
            bilinear_resize(raster.pixels[..., c].astype(np.float64), config.render_size)
            for c in range(4)
        ]
        pixels = np.clip(np.rint(np.stack(channels, axis=-1)), 0, 255).astype(np.uint8)
        raster = Raster(width=config.render_size, height=config.render_size,
                        pixels=pixels, background=raster.background)
    return raster


def analyze_document(doc: SvgDocument, reference: Raster,
                     config: RunConfig) -> list[LooResult]:
    backend = make_backend(
        config.backend, background=config.background, url=config.embed_url,
        timeout=config.embed_timeout, retries=config.embed_retries)
    return loo_analyze(
        doc, reference, backend,
        size=config.render_size, background=config.background,
        tau_helpful=config.tau_helpful, tau_harmful=config.tau_harmful,
        workers=config.workers)


def attribution_for(doc: SvgDocument, manifest_path: str | Path,
                    config: RunConfig) -> tuple[AttributionMatrix, ConceptSet]:
    """Footprints x fused concepts for a prepared (already split) document."""
    candidates = load_heatmaps(manifest_path, config.render_size)
    concepts = fuse(
        candidates,
        instance_score_min=config.instance_score_min,
        area_bounds=(config.area_fraction_min, config.area_fraction_max),
        iou_merge_threshold=config.iou_merge_threshold,
        binarize_level=config.binarize_level)
    _, footprints = compute_footprints(
        doc, size=config.render_size, background=config.background,
        workers=config.workers)
    matrix = attribute(footprints, concepts, epsilon=config.epsilon,
                       inactive_threshold=config.inactive_threshold)
    return matrix, concepts
