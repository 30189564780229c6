"""Concept-listing and grounding providers behind a small adapter interface.

The color-cluster provider is fully deterministic and needs no model
weights, so the manifest contract can be tested offline. Model-backed
adapters (text-prompted segmentation via transformers) plug into the same
interface and report themselves unavailable when their runtime is missing.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image

HEATMAP_SIZE = 352  # native emission resolution; consumers upsample

# Small palette for naming color clusters.
_PALETTE: list[tuple[str, tuple[int, int, int]]] = [
    ("black", (0, 0, 0)), ("white", (255, 255, 255)), ("gray", (128, 128, 128)),
    ("red", (220, 40, 40)), ("green", (40, 180, 40)), ("blue", (40, 40, 220)),
    ("yellow", (230, 220, 50)), ("orange", (255, 150, 40)),
    ("purple", (150, 60, 200)), ("pink", (250, 150, 190)),
    ("brown", (140, 90, 40)), ("cyan", (60, 200, 220)),
]


class ProviderUnavailable(RuntimeError):
    """The provider's model backend cannot run in this environment."""


@dataclass(frozen=True)
class HeatmapCandidate:
    provider: str  # "text-prompted-segmentation" | "instance-mask"
    values: np.ndarray  # (HEATMAP_SIZE, HEATMAP_SIZE) float in [0, 1]
    score: float | None


def decode_image(png_bytes: bytes) -> np.ndarray:
    """PNG bytes to an RGBA uint8 array; raises ValueError on junk."""
    try:
        img = Image.open(io.BytesIO(png_bytes)).convert("RGBA")
    except Exception as exc:
        raise ValueError(f"not a decodable image: {exc}") from exc
    if img.width == 0 or img.height == 0:
        raise ValueError("empty image")
    return np.asarray(img, dtype=np.uint8)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def _resize_nearest(values: np.ndarray, size: int) -> np.ndarray:
    h, w = values.shape
    rows = (np.arange(size) * h // size).clip(0, h - 1)
    cols = (np.arange(size) * w // size).clip(0, w - 1)
    return values[rows][:, cols]


class ColorClusterProvider:
    """Deterministic stub: clusters pixels by palette color.

    Concept listing names the dominant clusters; grounding turns a concept
    name back into a sigmoid-normalized closeness map for the palette color
    mentioned in the name. Unknown concept names ground to foreground
    opacity so every request yields a usable heatmap.
    """

    name = "color-cluster"
    min_cluster_fraction = 0.005
    max_concepts = 8

    def list_concepts(self, image: np.ndarray) -> list[str]:
        rgb = image[..., :3].astype(np.float64)
        alpha = image[..., 3].astype(np.float64) / 255.0
        weights = alpha.reshape(-1)
        labels = self._nearest_palette(rgb).reshape(-1)
        counts = np.bincount(labels, weights=weights, minlength=len(_PALETTE))
        total = counts.sum()
        if total <= 0:
            return ["background"]
        order = np.argsort(-counts, kind="stable")
        names = []
        for idx in order:
            if counts[idx] / total < self.min_cluster_fraction:
                break
            names.append(f"{_PALETTE[idx][0]} region")
            if len(names) >= self.max_concepts:
                break
        if not names:
            return ["background"]
        if len(names) == 1 and _PALETTE[order[0]][0] in ("white", "black", "gray"):
            return ["background"]
        return names

    def ground(self, image: np.ndarray, concept: str) -> list[HeatmapCandidate]:
        rgb = image[..., :3].astype(np.float64)
        alpha = image[..., 3].astype(np.float64) / 255.0
        target = self._palette_for(concept)
        if target is None:
            # fallback: foreground opacity as a soft map
            soft = _resize_nearest(alpha, HEATMAP_SIZE)
        else:
            dist = np.linalg.norm(rgb - np.asarray(target, dtype=np.float64), axis=-1)
            dist /= np.sqrt(3.0) * 255.0
            soft = _sigmoid((0.22 - dist) * 18.0) * alpha
            soft = _resize_nearest(soft, HEATMAP_SIZE)
        soft = np.clip(soft, 0.0, 1.0)
        binary = (soft > 0.5).astype(np.float64)
        score = float(soft.max()) if soft.size else 0.0
        return [
            HeatmapCandidate("text-prompted-segmentation", soft, None),
            HeatmapCandidate("instance-mask", binary, score),
        ]

    @staticmethod
    def _nearest_palette(rgb: np.ndarray) -> np.ndarray:
        palette = np.asarray([c for _, c in _PALETTE], dtype=np.float64)
        dists = np.linalg.norm(rgb[..., None, :] - palette, axis=-1)
        return dists.argmin(axis=-1)

    @staticmethod
    def _palette_for(concept: str) -> tuple[int, int, int] | None:
        lowered = concept.lower()
        for name, color in _PALETTE:
            if name in lowered:
                return color
        return None


class TextSegmentationProvider:
    """Text-prompted segmentation through a transformers pipeline.

    Requires model weights on disk; reports unavailable otherwise so the
    service degrades to the stub provider with a note.
    """

    name = "clipseg"

    def __init__(self, model_id: str = "CIDAS/clipseg-rd64-refined"):
        self.model_id = model_id
        self._pipeline = None

    def _load(self):
        if self._pipeline is not None:
            return self._pipeline
        try:
            from transformers import CLIPSegForImageSegmentation, CLIPSegProcessor

            processor = CLIPSegProcessor.from_pretrained(self.model_id)
            model = CLIPSegForImageSegmentation.from_pretrained(self.model_id)
        except Exception as exc:
            raise ProviderUnavailable(
                f"text-segmentation model {self.model_id!r} unavailable: {exc}") from exc
        self._pipeline = (processor, model)
        return self._pipeline

    def list_concepts(self, image: np.ndarray) -> list[str]:
        raise ProviderUnavailable("concept listing needs a vision-language model")

    def ground(self, image: np.ndarray, concept: str) -> list[HeatmapCandidate]:
        processor, model = self._load()
        import torch

        pil = Image.fromarray(image, mode="RGBA").convert("RGB")
        inputs = processor(text=[concept], images=[pil], return_tensors="pt")
        with torch.no_grad():
            logits = model(**inputs).logits
        soft = torch.sigmoid(logits)[0].cpu().numpy().astype(np.float64)
        soft = _resize_nearest(soft, HEATMAP_SIZE)
        return [HeatmapCandidate("text-prompted-segmentation", soft, None)]


def default_providers() -> dict[str, object]:
    return {"color-cluster": ColorClusterProvider(), "clipseg": TextSegmentationProvider()}
