"""Heatmap manifest assembly in the format the analysis library loads."""

from __future__ import annotations

import base64
import io
import json
from pathlib import Path

import numpy as np
from PIL import Image

from .providers import HeatmapCandidate


def heatmap_png_bytes(values: np.ndarray) -> bytes:
    """8-bit grayscale PNG for a [0, 1] float map."""
    data = np.clip(np.rint(values * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(data, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def _slug(name: str) -> str:
    return "".join(ch if ch.isalnum() else "-" for ch in name.lower()).strip("-") or "concept"


def build_manifest(grounded: list[tuple[str, list[HeatmapCandidate]]],
                   render_size: int) -> tuple[dict, dict[str, bytes]]:
    """Manifest dict plus the PNG payloads it references (relative paths)."""
    concepts = []
    files: dict[str, bytes] = {}
    for idx, (name, candidates) in enumerate(grounded):
        entries = []
        for k, cand in enumerate(candidates):
            rel = f"{idx:02d}_{_slug(name)}_{cand.provider}_{k}.png"
            files[rel] = heatmap_png_bytes(cand.values)
            entries.append({"provider": cand.provider, "score": cand.score, "png": rel})
        concepts.append({"name": name, "candidates": entries})
    return {"render_size": render_size, "concepts": concepts}, files


def write_manifest(out_dir: str | Path, manifest: dict, files: dict[str, bytes],
                   manifest_name: str = "heatmaps.json") -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for rel, payload in files.items():
        (out / rel).write_bytes(payload)
    path = out / manifest_name
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def files_to_base64(files: dict[str, bytes]) -> dict[str, str]:
    return {rel: base64.b64encode(data).decode("ascii") for rel, data in files.items()}
