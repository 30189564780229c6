"""HTTP service: concept listing and spatial grounding.

POST /concepts   body: PNG bytes                 -> [str, ...]
POST /ground     body: JSON {image: b64 png,
                             concepts: [str,...],
                             render_size: int}   -> {"manifest": {...},
                                                     "files": {path: b64 png}}

The manifest in the /ground response, written next to its decoded files,
is exactly the heatmap manifest format the analysis library loads. The
service is stateless; providers are adapters chosen per request.
"""

from __future__ import annotations

import base64

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .manifest import build_manifest, files_to_base64
from .providers import ProviderUnavailable, decode_image, default_providers

DEFAULT_RENDER_SIZE = 384
MAX_CONCEPTS = 16


class GroundRequest(BaseModel):
    image: str = Field(description="base64-encoded PNG")
    concepts: list[str] = Field(default_factory=list)
    provider: str = "color-cluster"
    render_size: int = DEFAULT_RENDER_SIZE


def create_app(providers: dict[str, object] | None = None) -> FastAPI:
    app = FastAPI(title="svglens grounding sidecar")
    app.state.providers = providers if providers is not None else default_providers()

    def provider_or_503(name: str):
        provider = app.state.providers.get(name)
        if provider is None:
            return None, JSONResponse(
                {"error": f"unknown provider {name!r}"}, status_code=400)
        return provider, None

    @app.post("/concepts")
    async def concepts(request: Request):
        payload = await request.body()
        try:
            image = decode_image(payload)
        except ValueError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        provider, error = provider_or_503("color-cluster")
        if error is not None:
            return error
        try:
            names = provider.list_concepts(image)[:MAX_CONCEPTS]
        except ProviderUnavailable as exc:
            return JSONResponse({"error": str(exc)}, status_code=503)
        return names  # contract: a JSON list of concept strings

    @app.post("/ground")
    async def ground(request: GroundRequest):
        try:
            image = decode_image(base64.b64decode(request.image, validate=True))
        except ValueError as exc:  # binascii.Error is a ValueError subclass
            return JSONResponse({"error": f"bad image payload: {exc}"}, status_code=400)
        provider, error = provider_or_503(request.provider)
        if error is not None:
            return error
        concept_names = [c for c in request.concepts if c.strip()]
        notes = []
        if not concept_names:
            lister, error = provider_or_503("color-cluster")
            if error is not None:
                return error
            concept_names = lister.list_concepts(image)[:MAX_CONCEPTS]
            notes.append("concepts listed by color-cluster provider")
        grounded = []
        for name in concept_names[:MAX_CONCEPTS]:
            try:
                candidates = provider.ground(image, name)
            except ProviderUnavailable as exc:
                fallback, error = provider_or_503("color-cluster")
                if error is not None or fallback is provider:
                    return JSONResponse({"error": str(exc)}, status_code=503)
                candidates = fallback.ground(image, name)
                notes.append(f"{name}: fell back to color-cluster ({exc})")
            grounded.append((name, candidates))
        manifest, files = build_manifest(grounded, request.render_size)
        if notes:
            manifest["notes"] = notes
        return {"manifest": manifest, "files": files_to_base64(files)}

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "providers": sorted(app.state.providers)}

    return app
