"""Five-edit validation protocol with mask-based edit precision."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .attribution import AttributionMatrix
from .concepts import ConceptSet
from .model import EditSpec, SvgDocument, apply_edit
from .raster import abs_diff, render

EDIT_PROTOCOL_KINDS = ("color", "delete", "move", "scale", "regroup")
DEFAULT_MOVE_PX = 20.0
DEFAULT_SCALE_FACTOR = 0.7


@dataclass(frozen=True)
class EditOutcome:
    kind: str
    concept: str
    target_change: float
    collateral: float
    precision: float | None   # None marks a no-op edit


def concept_groups(matrix: AttributionMatrix) -> dict[int, tuple[int, ...]]:
    """Active elements grouped by primary concept index."""
    groups: dict[int, list[int]] = {}
    for i in range(matrix.n_elements):
        if matrix.active[i]:
            groups.setdefault(int(matrix.primary[i]), []).append(i)
    return {j: tuple(members) for j, members in sorted(groups.items())}


def edit_precision(diff_values: np.ndarray, target_mask: np.ndarray,
                   other_mask: np.ndarray) -> tuple[float, float, float | None]:
    """Target change, collateral damage, and their precision ratio.

    Pixels inside both the target and another concept count toward both
    sums; pixels in no concept mask count as collateral.
    """
    target_change = float(diff_values[target_mask].sum())
    # other-concept pixels plus pixels in no mask; target-overlap pixels
    # therefore count toward both sums.
    collateral_region = other_mask | ~(target_mask | other_mask)
    collateral = float(diff_values[collateral_region].sum())
    total = target_change + collateral
    if total <= 0.0:
        return target_change, collateral, None
    return target_change, collateral, target_change / total


def regroup_precision(diff_values: np.ndarray,
                      target_mask: np.ndarray) -> tuple[float, float, float | None]:
    """Render-preservation score for regroup edits (`regroup_precision_v1`).

    Target change is 1 minus the mean render diff inside the target mask,
    collateral is the mean diff outside, so an order change that leaves the
    render untouched scores near 1.
    """
    if not target_mask.any():
        return 0.0, 0.0, None
    inside = float(diff_values[target_mask].mean())
    outside_mask = ~target_mask
    outside = float(diff_values[outside_mask].mean()) if outside_mask.any() else 0.0
    target_change = 1.0 - inside
    total = target_change + outside
    if total <= 0.0:
        return target_change, outside, None
    return target_change, outside, target_change / total


def run_edit_protocol(
    doc: SvgDocument,
    matrix: AttributionMatrix,
    concepts: ConceptSet,
    seed: int = 0,
    *,
    size: int = 384,
    background: str = "white",
    move_px: float = DEFAULT_MOVE_PX,
    scale_factor: float = DEFAULT_SCALE_FACTOR,
    binarize_level: float = 0.5,
) -> list[EditOutcome]:
    """Apply the five edit kinds to every covered concept group.

    The move offset totals `move_px` in render space, converted to user
    units through the viewbox transform. All randomness (edit colors) flows
    from the given seed.
    """
    rng = np.random.default_rng(seed)
    groups = concept_groups(matrix)
    if not groups:
        return []
    pre = render(doc, size, background)
    masks = [h.values > binarize_level for h in concepts.heatmaps]

    _, _, vw, vh = doc.viewbox
    render_scale = size / max(vw, vh)
    move_user = (move_px / render_scale) / math.sqrt(2.0)

    outcomes: list[EditOutcome] = []
    for j, members in groups.items():
        concept_name = concepts.heatmaps[j].name
        target_mask = masks[j]
        other_mask = np.zeros_like(target_mask)
        for other_j, mask in enumerate(masks):
            if other_j != j:
                other_mask |= mask
        for kind in EDIT_PROTOCOL_KINDS:
            if kind == "color":
                rgb = tuple(int(v) for v in rng.integers(0, 256, size=3))
                spec = EditSpec(kind="color", targets=members, color=rgb)
            elif kind == "delete":
                spec = EditSpec(kind="delete", targets=members)
            elif kind == "move":
                spec = EditSpec(kind="move", targets=members, dx=move_user, dy=move_user)
            elif kind == "scale":
                spec = EditSpec(kind="scale", targets=members, factor=scale_factor)
            else:
                spec = EditSpec(kind="regroup", targets=members)
            post = render(apply_edit(doc, spec), size, background)
            diff = abs_diff(pre, post, background)
            if kind == "regroup":
                target_change, collateral, precision = regroup_precision(
                    diff.values, target_mask)
            else:
                target_change, collateral, precision = edit_precision(
                    diff.values, target_mask, other_mask)
            outcomes.append(EditOutcome(
                kind=kind, concept=concept_name,
                target_change=target_change, collateral=collateral,
                precision=precision))
    return outcomes


def summarize_outcomes(outcomes: list[EditOutcome]) -> dict[str, float | None]:
    """Mean defined precision per edit kind plus the overall mean."""
    summary: dict[str, float | None] = {}
    for kind in EDIT_PROTOCOL_KINDS:
        values = [o.precision for o in outcomes if o.kind == kind and o.precision is not None]
        summary[kind] = float(np.mean(values)) if values else None
    defined = [o.precision for o in outcomes if o.precision is not None]
    summary["overall"] = float(np.mean(defined)) if defined else None
    return summary
