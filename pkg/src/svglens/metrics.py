"""Structural metrics aggregated from the attribution matrix.

All aggregates live in [0, 1]. Per-concept values are None for concepts with
no positively attributed active element; such concepts are skipped by the
per-concept means.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attribution import AttributionMatrix
from .errors import UndefinedMetricError


def mean_purity(matrix: AttributionMatrix) -> float:
    """Arithmetic mean of purity over active elements."""
    if matrix.n_active == 0:
        raise UndefinedMetricError("mean purity is undefined with zero active elements")
    return float(matrix.purity[matrix.active].mean())


def coverage(matrix: AttributionMatrix) -> float:
    """Fraction of concepts that are the primary concept of some active element."""
    c = matrix.n_concepts
    if c < 1:
        raise UndefinedMetricError("coverage requires at least one concept")
    covered = set(matrix.primary[matrix.active].tolist())
    return len(covered) / c


def concept_member_count(matrix: AttributionMatrix, j: int) -> int:
    """Active elements with strictly positive attribution to concept j."""
    return int(np.sum(matrix.active & (matrix.values[:, j] > 0.0)))


def compactness(matrix: AttributionMatrix, j: int) -> float | None:
    """Normalized concentration of concept j's attribution across elements.

    Shares are taken over active elements with positive attribution; with
    n contributors and H the sum of squared shares, the score is
    (H - 1/n) / (1 - 1/n), and 1.0 by convention when n = 1. Concepts with
    no contributor return None.
    """
    mask = matrix.active & (matrix.values[:, j] > 0.0)
    n = int(mask.sum())
    if n == 0:
        return None
    if n == 1:
        return 1.0
    contributions = matrix.values[mask, j]
    shares = contributions / contributions.sum()
    h = float((shares**2).sum())
    return (h - 1.0 / n) / (1.0 - 1.0 / n)


def locality(matrix: AttributionMatrix, j: int, n_elements: int | None = None) -> float | None:
    """Position concentration of concept j along the paint order.

    One minus the attribution-weighted mean absolute deviation of element
    indices from their weighted centroid, normalized by (N-1)/2 and clamped
    to [0, 1]. N counts all document elements, active or not. Returns None
    for concepts with no positive attribution; a single-element document
    scores 1.0.
    """
    n = matrix.n_elements if n_elements is None else n_elements
    mask = matrix.active & (matrix.values[:, j] > 0.0)
    total = float(matrix.values[mask, j].sum())
    if total <= 0.0:
        return None
    if n <= 1:
        return 1.0
    idx = np.nonzero(mask)[0].astype(np.float64)
    weights = matrix.values[mask, j] / total
    centroid = float((weights * idx).sum())
    mad = float((weights * np.abs(idx - centroid)).sum())
    value = 1.0 - mad / ((n - 1) / 2.0)
    return min(1.0, max(0.0, value))


def crosstalk(matrix: AttributionMatrix) -> float:
    """Attribution-mass-weighted mean of (1 - purity) over active elements.

    The aggregation is recorded in reports as `crosstalk_v1`.
    """
    if matrix.n_active == 0:
        raise UndefinedMetricError("crosstalk is undefined with zero active elements")
    masses = matrix.row_masses()[matrix.active]
    impurity = 1.0 - matrix.purity[matrix.active]
    total = float(masses.sum())
    if total <= 0.0:
        return 0.0
    return float((masses * impurity).sum() / total)


CROSSTALK_DEFINITION = "crosstalk_v1"


@dataclass(frozen=True)
class StructuralReport:
    purity: float
    coverage: float
    compactness_per_concept: dict[str, float | None]
    compactness_mean: float | None
    locality_per_concept: dict[str, float | None]
    locality_mean: float | None
    crosstalk: float
    n_elements: int
    n_active: int
    n_concepts: int
    config: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "purity": self.purity,
            "coverage": self.coverage,
            "compactness": {
                "per_concept": self.compactness_per_concept,
                "mean": self.compactness_mean,
            },
            "locality": {
                "per_concept": self.locality_per_concept,
                "mean": self.locality_mean,
            },
            "crosstalk": self.crosstalk,
            "crosstalk_definition": CROSSTALK_DEFINITION,
            "n_elements": self.n_elements,
            "n_active": self.n_active,
            "n_concepts": self.n_concepts,
            "config": self.config,
        }


def structural_report(matrix: AttributionMatrix, n_elements: int | None = None,
                      config: dict | None = None) -> StructuralReport:
    """All structural metrics for one document."""
    n = matrix.n_elements if n_elements is None else n_elements
    names = matrix.concept_names
    comp = {name: compactness(matrix, j) for j, name in enumerate(names)}
    loc = {name: locality(matrix, j, n) for j, name in enumerate(names)}
    comp_values = [v for v in comp.values() if v is not None]
    loc_values = [v for v in loc.values() if v is not None]
    return StructuralReport(
        purity=mean_purity(matrix),
        coverage=coverage(matrix),
        compactness_per_concept=comp,
        compactness_mean=float(np.mean(comp_values)) if comp_values else None,
        locality_per_concept=loc,
        locality_mean=float(np.mean(loc_values)) if loc_values else None,
        crosstalk=crosstalk(matrix),
        n_elements=n,
        n_active=matrix.n_active,
        n_concepts=matrix.n_concepts,
        config=dict(config or {}),
    )
