"""Synthetic artifact injection and zero-shot detection harness."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .colors import rgb_to_hex
from .errors import ScoringError
from .geometry import format_number
from .model import Origin, SvgDocument, VisualElement, _derive
from .raster import Raster, compose_layers, render_layers, ssim
from .scoring import SimilarityBackend, loo_analyze, score

ARTIFACT_KINDS = ("random-shape", "stray-path", "duplicate-with-offset")
DETECTION_METHODS = ("loo", "prefix-delta", "isolated-score", "random")
DEFAULT_COUNT = 3


@dataclass(frozen=True)
class InjectionRecord:
    source: SvgDocument
    injected: SvgDocument
    truth: tuple[int, ...]        # indices of injected elements in the injected doc
    kinds: tuple[str, ...]        # artifact kind per truth entry
    seed: int


@dataclass(frozen=True)
class DetectionResult:
    method: str
    flagged: tuple[int, ...]
    precision: float
    recall: float
    f1: float
    delta_ssim: float


def inject(doc: SvgDocument, count: int = DEFAULT_COUNT, seed: int = 0) -> InjectionRecord:
    """Append `count` seeded artifacts at random z-positions.

    Artifacts are visibly sized relative to the viewbox: random shapes cover
    2-15% of the canvas, stray paths carry a visible stroke, and duplicates
    are clones of original elements offset by 5-15% of the viewbox.
    """
    rng = np.random.default_rng(seed)
    elements = list(doc.elements)
    truth: list[int] = []
    kinds: list[str] = []
    available = list(ARTIFACT_KINDS) if doc.n_elements > 0 else \
        [k for k in ARTIFACT_KINDS if k != "duplicate-with-offset"]
    for _ in range(count):
        kind = available[int(rng.integers(0, len(available)))]
        artifact = _make_artifact(kind, doc, rng)
        position = int(rng.integers(0, len(elements) + 1))
        elements.insert(position, artifact)
        truth = [t + 1 if t >= position else t for t in truth]
        truth.append(position)
        kinds.append(kind)
    injected = _derive(doc, elements)
    return InjectionRecord(
        source=doc, injected=injected, truth=tuple(truth), kinds=tuple(kinds), seed=seed)


def _rand_color(rng: np.random.Generator) -> str:
    return rgb_to_hex(tuple(int(v) for v in rng.integers(0, 256, size=3)))


def _make_artifact(kind: str, doc: SvgDocument, rng: np.random.Generator) -> VisualElement:
    vx, vy, vw, vh = doc.viewbox
    if kind == "random-shape":
        area_fraction = float(rng.uniform(0.02, 0.15))
        aspect = float(rng.uniform(0.5, 2.0))
        area = area_fraction * vw * vh
        w = min((area * aspect) ** 0.5, vw)
        h = min(area / w, vh)
        x = vx + float(rng.uniform(0, max(vw - w, 1e-9)))
        y = vy + float(rng.uniform(0, max(vh - h, 1e-9)))
        if rng.integers(0, 2) == 0:
            attrs = {"x": format_number(x), "y": format_number(y),
                     "width": format_number(w), "height": format_number(h),
                     "fill": _rand_color(rng)}
            return VisualElement(index=-1, kind="rect", attributes=attrs,
                                 origin=Origin("artifact-shape"))
        attrs = {"cx": format_number(x + w / 2), "cy": format_number(y + h / 2),
                 "rx": format_number(w / 2), "ry": format_number(h / 2),
                 "fill": _rand_color(rng)}
        return VisualElement(index=-1, kind="ellipse", attributes=attrs,
                             origin=Origin("artifact-shape"))
    if kind == "stray-path":
        n_segments = int(rng.integers(3, 7))
        xs = vx + rng.uniform(0.1, 0.9, size=n_segments + 1) * vw
        ys = vy + rng.uniform(0.1, 0.9, size=n_segments + 1) * vh
        points = " ".join(f"{format_number(float(x))},{format_number(float(y))}"
                          for x, y in zip(xs, ys))
        width = float(rng.uniform(0.01, 0.03)) * min(vw, vh)
        attrs = {"points": points, "fill": "none", "stroke": _rand_color(rng),
                 "stroke-width": format_number(width)}
        return VisualElement(index=-1, kind="polyline", attributes=attrs,
                             origin=Origin("artifact-stray"))
    if kind == "duplicate-with-offset":
        template = doc.elements[int(rng.integers(0, doc.n_elements))]
        dx = float(rng.uniform(0.05, 0.15)) * vw * (1 if rng.integers(0, 2) else -1)
        dy = float(rng.uniform(0.05, 0.15)) * vh * (1 if rng.integers(0, 2) else -1)
        from .geometry import Affine, parse_transform

        attrs = {k: v for k, v in template.attributes.items() if k != "id"}
        current = parse_transform(attrs.get("transform"))
        attrs["transform"] = (Affine.translation(dx, dy) @ current).to_svg()
        return VisualElement(index=-1, kind=template.kind, attributes=attrs,
                             text=template.text, raw=template.raw,
                             origin=Origin("artifact-duplicate"),
                             children=template.children)
    raise ValueError(f"unknown artifact kind {kind!r}")


def detect(
    doc: SvgDocument,
    reference: Raster,
    method: str,
    k: int,
    backend: SimilarityBackend,
    truth: tuple[int, ...],
    *,
    seed: int = 0,
    size: int = 384,
    background: str = "white",
) -> DetectionResult:
    """Flag exactly k suspect elements and score them against ground truth."""
    n = doc.n_elements
    if n < k:
        raise ScoringError(f"document has {n} elements, cannot flag {k}")
    if method == "loo":
        results = loo_analyze(doc, reference, backend, size=size, background=background)
        order = sorted(range(n), key=lambda i: (results[i].delta, i))
        flagged = order[:k]
    elif method == "prefix-delta":
        flagged = _prefix_delta_flags(doc, reference, backend, k, size, background)
    elif method == "isolated-score":
        layers = render_layers(doc, size)
        scores = []
        for i in range(n):
            alone = compose_layers([layers[i]], size, background)
            scores.append(score(backend, alone, reference))
        order = sorted(range(n), key=lambda i: (scores[i], i))
        flagged = order[:k]
    elif method == "random":
        rng = np.random.default_rng(seed)
        flagged = sorted(int(v) for v in rng.choice(n, size=k, replace=False))
    else:
        raise ValueError(f"unknown detection method {method!r}")

    flagged_t = tuple(sorted(flagged))
    truth_set = set(truth)
    hits = len(truth_set.intersection(flagged_t))
    precision = hits / k if k else 0.0
    recall = hits / len(truth_set) if truth_set else 0.0
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)

    layers = render_layers(doc, size)
    before = compose_layers(layers, size, background)
    after_layers = [l for i, l in enumerate(layers) if i not in set(flagged_t)]
    after = compose_layers(after_layers, size, background)
    delta_ssim = ssim(after, reference, background) - ssim(before, reference, background)
    return DetectionResult(method=method, flagged=flagged_t, precision=precision,
                           recall=recall, f1=f1, delta_ssim=delta_ssim)


def _prefix_delta_flags(doc: SvgDocument, reference: Raster, backend: SimilarityBackend,
                        k: int, size: int, background: str) -> list[int]:
    """Score of the paint-order prefix with each element minus without it."""
    layers = render_layers(doc, size)
    prev = compose_layers([], size, background)
    prev_score = score(backend, prev, reference)
    deltas = []
    for i in range(doc.n_elements):
        current = compose_layers(layers[: i + 1], size, background)
        current_score = score(backend, current, reference)
        deltas.append(current_score - prev_score)
        prev_score = current_score
    order = sorted(range(doc.n_elements), key=lambda i: (deltas[i], i))
    return order[:k]
