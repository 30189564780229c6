"""Concept heatmaps: manifest loading, provider fusion, and merging."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConceptError
from .raster import load_gray_png

PROVIDERS = ("text-prompted-segmentation", "instance-mask", "file")

DEFAULT_INSTANCE_SCORE_MIN = 0.3
DEFAULT_AREA_BOUNDS = (0.005, 0.95)
DEFAULT_IOU_MERGE = 0.9
DEFAULT_BINARIZE = 0.5


@dataclass(frozen=True)
class ConceptHeatmap:
    """A grounded spatial map for one named concept, values in [0, 1]."""

    name: str
    values: np.ndarray  # (size, size) float64
    provider: str
    score: float | None = None

    @property
    def area_fraction(self) -> float:
        return float(self.values.mean())

    @property
    def size(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class ConceptCandidates:
    name: str
    candidates: tuple[ConceptHeatmap, ...]


@dataclass(frozen=True)
class ConceptSet:
    """Final fused concepts; downstream metrics require at least one."""

    heatmaps: tuple[ConceptHeatmap, ...]
    notes: tuple[str, ...] = ()

    @property
    def count(self) -> int:
        return len(self.heatmaps)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(h.name for h in self.heatmaps)


def bilinear_resize(values: np.ndarray, out_size: int) -> np.ndarray:
    """Corner-aligned bilinear resampling to out_size x out_size."""
    h, w = values.shape
    if h == out_size and w == out_size:
        return values.astype(np.float64)
    if h < 1 or w < 1:
        raise ConceptError("cannot resize an empty heatmap")

    def axis_coords(n_in: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if n_in == 1:
            idx = np.zeros(out_size, dtype=np.int64)
            return idx, idx, np.zeros(out_size)
        pos = np.linspace(0.0, n_in - 1.0, out_size)
        lo = np.floor(pos).astype(np.int64)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, pos - lo

    y_lo, y_hi, fy = axis_coords(h)
    x_lo, x_hi, fx = axis_coords(w)
    top = values[y_lo][:, x_lo] * (1 - fx) + values[y_lo][:, x_hi] * fx
    bottom = values[y_hi][:, x_lo] * (1 - fx) + values[y_hi][:, x_hi] * fx
    return top * (1 - fy)[:, None] + bottom * fy[:, None]


def load_heatmaps(manifest_path: str | Path, render_size: int) -> list[ConceptCandidates]:
    """Load per-concept candidate heatmaps from a manifest.

    Manifest schema:
        { "render_size": int,
          "concepts": [ { "name": str,
                          "candidates": [ { "provider": str,
                                            "score": float|null,
                                            "png": "relative/path.png" } ] } ] }

    PNGs are 8-bit grayscale; values map to [0, 1] and are bilinearly
    resampled to render_size when needed.
    """
    path = Path(manifest_path)
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConceptError(f"heatmap manifest not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConceptError(f"invalid manifest JSON {path}: {exc}") from exc
    concepts = manifest.get("concepts")
    if not isinstance(concepts, list) or not concepts:
        raise ConceptError(f"manifest {path} declares no concepts")

    out: list[ConceptCandidates] = []
    for entry in concepts:
        name = entry.get("name")
        if not name or not isinstance(name, str):
            raise ConceptError(f"manifest {path}: concept without a name")
        raw_candidates = entry.get("candidates")
        if not isinstance(raw_candidates, list) or not raw_candidates:
            raise ConceptError(f"manifest {path}: concept {name!r} has no candidates")
        candidates = []
        for cand in raw_candidates:
            provider = cand.get("provider")
            if provider not in PROVIDERS:
                raise ConceptError(
                    f"manifest {path}: concept {name!r} has unknown provider {provider!r}")
            png_rel = cand.get("png")
            if not png_rel:
                raise ConceptError(f"manifest {path}: concept {name!r} candidate without png")
            png_path = path.parent / png_rel
            try:
                values = load_gray_png(png_path)
            except Exception as exc:
                raise ConceptError(f"concept {name!r}: {exc}") from exc
            values = bilinear_resize(values, render_size)
            score = cand.get("score")
            candidates.append(ConceptHeatmap(
                name=name, values=values, provider=provider,
                score=float(score) if score is not None else None))
        out.append(ConceptCandidates(name=name, candidates=tuple(candidates)))
    return out


def binary_support(heatmap: ConceptHeatmap, level: float = DEFAULT_BINARIZE) -> np.ndarray:
    return heatmap.values > level


def support_iou(a: np.ndarray, b: np.ndarray) -> float:
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 0.0
    return float(np.logical_and(a, b).sum() / union)


def select_candidate(candidates: tuple[ConceptHeatmap, ...],
                     instance_score_min: float = DEFAULT_INSTANCE_SCORE_MIN,
                     area_bounds: tuple[float, float] = DEFAULT_AREA_BOUNDS) -> ConceptHeatmap:
    """Prefer a confident instance mask; otherwise the soft heatmap.

    An instance-mask candidate wins iff its provider score is at least
    instance_score_min and its area fraction lies within area_bounds.
    """
    if not candidates:
        raise ConceptError("concept has zero candidates")
    lo, hi = area_bounds
    for cand in candidates:
        if cand.provider != "instance-mask" or cand.score is None:
            continue
        if cand.score >= instance_score_min and lo <= cand.area_fraction <= hi:
            return cand
    for cand in candidates:
        if cand.provider == "text-prompted-segmentation":
            return cand
    return candidates[0]


def fuse(
    concept_candidates: list[ConceptCandidates],
    *,
    instance_score_min: float = DEFAULT_INSTANCE_SCORE_MIN,
    area_bounds: tuple[float, float] = DEFAULT_AREA_BOUNDS,
    iou_merge_threshold: float = DEFAULT_IOU_MERGE,
    binarize_level: float = DEFAULT_BINARIZE,
) -> ConceptSet:
    """Select one heatmap per concept, then merge near-duplicate concepts.

    Merging is greedy over pairs in descending binary-support IoU; a merge
    keeps the earlier concept's name and takes the element-wise max of the
    two heatmaps. Concepts whose selected heatmap is all-zero are dropped
    with a note.
    """
    if not concept_candidates:
        raise ConceptError("no concepts to fuse")
    notes: list[str] = []
    selected: list[ConceptHeatmap] = []
    for group in concept_candidates:
        chosen = select_candidate(group.candidates, instance_score_min, area_bounds)
        if not np.any(chosen.values > 0):
            notes.append(f"concept {group.name!r} dropped: all-zero heatmap after selection")
            continue
        selected.append(replace(chosen, name=group.name))
    if not selected:
        raise ConceptError("all concepts dropped: every selected heatmap is all-zero")

    merged = _merge_overlapping(selected, iou_merge_threshold, binarize_level, notes)
    return ConceptSet(heatmaps=tuple(merged), notes=tuple(notes))


def _merge_overlapping(heatmaps: list[ConceptHeatmap], threshold: float,
                       binarize_level: float, notes: list[str]) -> list[ConceptHeatmap]:
    items = list(heatmaps)
    while len(items) > 1:
        supports = [binary_support(h, binarize_level) for h in items]
        best = None  # (iou, i, j) with i < j
        for i in range(len(items)):
            for j in range(i + 1, len(items)):
                iou = support_iou(supports[i], supports[j])
                if iou > threshold and (best is None or iou > best[0]):
                    best = (iou, i, j)
        if best is None:
            break
        _, i, j = best
        keep, drop = items[i], items[j]
        notes.append(
            f"concept {drop.name!r} merged into {keep.name!r} "
            f"(support IoU {best[0]:.3f})")
        fusedmap = replace(keep, values=np.maximum(keep.values, drop.values))
        items = [fusedmap if k == i else h for k, h in enumerate(items) if k != j]
    return items
