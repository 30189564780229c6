"""Reference-based similarity backends and the leave-one-out engine.

The engine rasterizes every element once and builds the full render plus the
N ablation renders by compositing layer subsets, which is numerically
identical to rendering each ablated document from scratch (element layers do
not depend on their neighbors).
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .errors import ScoringError
from .model import SvgDocument
from .raster import (
    DiffMap,
    Raster,
    abs_diff,
    compose_layers,
    mse,
    raster_to_png_bytes,
    render_layers,
    ssim,
)

DEFAULT_TAU_HELPFUL = 0.005
DEFAULT_TAU_HARMFUL = -0.005

BACKEND_KINDS = ("neg-mse", "ssim", "embedding-service")


class SimilarityBackend:
    """Scores an image against a reference; higher means more similar."""

    kind: str = "?"

    def score(self, image: Raster, reference: Raster) -> float:
        raise NotImplementedError


class NegMseBackend(SimilarityBackend):
    kind = "neg-mse"

    def __init__(self, background: str = "white"):
        self.background = background

    def score(self, image: Raster, reference: Raster) -> float:
        return -mse(image, reference, self.background)


class SsimBackend(SimilarityBackend):
    kind = "ssim"

    def __init__(self, background: str = "white"):
        self.background = background

    def score(self, image: Raster, reference: Raster) -> float:
        return ssim(image, reference, self.background)


class EmbeddingServiceBackend(SimilarityBackend):
    """Cosine similarity of embeddings served over HTTP.

    Protocol: POST <url>/embed with PNG bytes; the service answers JSON
    {"embedding": [float, ...]}. Embeddings are cached per raster content,
    so the reference is embedded once per run.
    """

    kind = "embedding-service"

    def __init__(self, url: str, timeout: float = 10.0, retries: int = 2):
        if not url:
            raise ScoringError("embedding-service backend requires a service URL")
        self.url = url.rstrip("/")
        if not self.url.endswith("/embed"):
            self.url += "/embed"
        self.timeout = timeout
        self.retries = retries
        self._cache: dict[str, list[float]] = {}

    def _embed(self, image: Raster) -> list[float]:
        key = hashlib.sha256(image.pixels.tobytes()).hexdigest()
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        import requests

        payload = raster_to_png_bytes(image)
        last_error: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = requests.post(
                    self.url, data=payload,
                    headers={"Content-Type": "image/png"}, timeout=self.timeout)
                if resp.status_code >= 500:
                    last_error = ScoringError(
                        f"embedding service error {resp.status_code}: {resp.text[:200]}")
                    continue
                if resp.status_code != 200:
                    raise ScoringError(
                        f"embedding service rejected request "
                        f"({resp.status_code}): {resp.text[:200]}")
                body = resp.json()
                embedding = body.get("embedding")
                if not isinstance(embedding, list) or not embedding:
                    raise ScoringError("embedding service returned no embedding")
                vector = [float(v) for v in embedding]
                self._cache[key] = vector
                return vector
            except ScoringError:
                raise
            except Exception as exc:  # connection errors, timeouts, bad JSON
                last_error = exc
        raise ScoringError(f"embedding service unreachable at {self.url}: {last_error}")

    def score(self, image: Raster, reference: Raster) -> float:
        a = self._embed(image)
        b = self._embed(reference)
        if len(a) != len(b):
            raise ScoringError("embedding dimensions differ between image and reference")
        dot = sum(x * y for x, y in zip(a, b))
        na = sum(x * x for x in a) ** 0.5
        nb = sum(y * y for y in b) ** 0.5
        if na == 0.0 or nb == 0.0:
            raise ScoringError("embedding service returned a zero vector")
        return dot / (na * nb)


def make_backend(kind: str, *, background: str = "white", url: str | None = None,
                 timeout: float = 10.0, retries: int = 2) -> SimilarityBackend:
    if kind == "neg-mse":
        return NegMseBackend(background)
    if kind == "ssim":
        return SsimBackend(background)
    if kind in ("embedding-service", "embedding"):
        return EmbeddingServiceBackend(url or "", timeout=timeout, retries=retries)
    raise ScoringError(f"unknown backend kind {kind!r}")


def score(backend: SimilarityBackend, image: Raster, reference: Raster) -> float:
    if (image.width, image.height) != (reference.width, reference.height):
        raise ScoringError(
            f"dimension mismatch: {image.width}x{image.height} vs "
            f"{reference.width}x{reference.height}")
    return backend.score(image, reference)


def classify(delta: float, tau_helpful: float = DEFAULT_TAU_HELPFUL,
             tau_harmful: float = DEFAULT_TAU_HARMFUL) -> str:
    if delta > tau_helpful:
        return "helpful"
    if delta < tau_harmful:
        return "harmful"
    return "neutral"


@dataclass(frozen=True)
class LooResult:
    index: int
    delta: float
    classification: str
    footprint: DiffMap
    footprint_mass: float


def loo_analyze(
    doc: SvgDocument,
    reference: Raster,
    backend: SimilarityBackend,
    *,
    size: int = 384,
    background: str = "white",
    tau_helpful: float = DEFAULT_TAU_HELPFUL,
    tau_harmful: float = DEFAULT_TAU_HARMFUL,
    workers: int = 1,
) -> list[LooResult]:
    """Leave-one-out deltas, classifications, and footprint masks.

    Performs the full render plus one render per element (N + 1 composites
    over shared element layers) and orders results by element index
    regardless of worker scheduling.
    """
    if (reference.width, reference.height) != (size, size):
        raise ScoringError(
            f"reference is {reference.width}x{reference.height}, "
            f"but render size is {size}")
    layers = render_layers(doc, size)
    full = compose_layers(layers, size, background)
    s_full = score(backend, full, reference)

    def analyze_one(i: int) -> LooResult:
        remaining = layers[:i] + layers[i + 1:]
        ablated = compose_layers(remaining, size, background)
        delta = s_full - score(backend, ablated, reference)
        footprint = abs_diff(full, ablated, background)
        return LooResult(
            index=i,
            delta=delta,
            classification=classify(delta, tau_helpful, tau_harmful),
            footprint=footprint,
            footprint_mass=footprint.mass,
        )

    indices = range(doc.n_elements)
    if workers <= 1:
        return [analyze_one(i) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(analyze_one, indices))


def compute_footprints(doc: SvgDocument, *, size: int = 384,
                       background: str = "white",
                       workers: int = 1) -> tuple[Raster, list[DiffMap]]:
    """Full render and per-element footprint masks, without any backend."""
    layers = render_layers(doc, size)
    full = compose_layers(layers, size, background)

    def footprint(i: int) -> DiffMap:
        ablated = compose_layers(layers[:i] + layers[i + 1:], size, background)
        return abs_diff(full, ablated, background)

    indices = range(doc.n_elements)
    if workers <= 1:
        maps = [footprint(i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            maps = list(pool.map(footprint, indices))
    return full, maps
