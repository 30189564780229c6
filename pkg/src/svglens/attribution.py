"""Element-concept attribution from footprints crossed with heatmaps."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .concepts import ConceptSet
from .errors import ConceptError
from .raster import DiffMap

DEFAULT_EPSILON = 1e-8
DEFAULT_INACTIVE_THRESHOLD = 0.01


@dataclass(frozen=True)
class AttributionMatrix:
    """N x C attribution with per-element activity, primary concept, purity.

    Row i holds the normalized overlap of element i's footprint with each
    concept heatmap. Elements whose total attribution falls below the
    inactive threshold keep their rows for inspection but are excluded from
    every downstream metric.
    """

    values: np.ndarray            # (N, C) float64, non-negative
    active: np.ndarray            # (N,) bool
    primary: np.ndarray           # (N,) int, argmax per row (ties -> lowest index)
    purity: np.ndarray            # (N,) float64 in [0, 1]
    epsilon: float
    concept_names: tuple[str, ...]

    @property
    def n_elements(self) -> int:
        return self.values.shape[0]

    @property
    def n_concepts(self) -> int:
        return self.values.shape[1]

    @property
    def n_active(self) -> int:
        return int(self.active.sum())

    def row_masses(self) -> np.ndarray:
        return self.values.sum(axis=1)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["element", "active", "primary_concept", "purity",
                             *self.concept_names])
            for i in range(self.n_elements):
                writer.writerow([
                    i,
                    int(self.active[i]),
                    self.concept_names[self.primary[i]],
                    repr(float(self.purity[i])),
                    *(repr(float(v)) for v in self.values[i]),
                ])


def from_values(
    values: np.ndarray,
    concept_names: tuple[str, ...] | None = None,
    epsilon: float = DEFAULT_EPSILON,
    inactive_threshold: float = DEFAULT_INACTIVE_THRESHOLD,
) -> AttributionMatrix:
    """Attribution matrix from raw values (for synthetic and derived matrices)."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] < 1:
        raise ValueError(f"expected an N x C matrix, got shape {values.shape}")
    if np.any(values < 0):
        raise ValueError("attribution values must be non-negative")
    names = concept_names or tuple(f"c{j}" for j in range(values.shape[1]))
    row_sums = values.sum(axis=1)
    return AttributionMatrix(
        values=values,
        active=row_sums >= inactive_threshold,
        primary=values.argmax(axis=1),
        purity=values.max(axis=1) / (row_sums + epsilon),
        epsilon=epsilon,
        concept_names=tuple(names),
    )


def attribute(
    footprints: list[DiffMap],
    concepts: ConceptSet,
    epsilon: float = DEFAULT_EPSILON,
    inactive_threshold: float = DEFAULT_INACTIVE_THRESHOLD,
) -> AttributionMatrix:
    """Attribution A[i, j] = sum(M_i * H_j) / (sum(M_i) + epsilon)."""
    if concepts.count == 0:
        raise ConceptError("attribution requires at least one concept")
    if not footprints:
        raise ValueError("attribution requires at least one footprint")
    shape = footprints[0].values.shape
    heat = np.stack([h.values for h in concepts.heatmaps])  # (C, H, W)
    if heat.shape[1:] != shape:
        raise ValueError(
            f"dimension mismatch: footprints are {shape}, heatmaps are {heat.shape[1:]}")

    n, c = len(footprints), concepts.count
    values = np.zeros((n, c), dtype=np.float64)
    for i, fp in enumerate(footprints):
        if fp.values.shape != shape:
            raise ValueError(f"footprint {i} has shape {fp.values.shape}, expected {shape}")
        mass = float(fp.values.sum())
        overlaps = (heat * fp.values).sum(axis=(1, 2))
        values[i] = overlaps / (mass + epsilon)
    return from_values(values, concepts.names, epsilon, inactive_threshold)
