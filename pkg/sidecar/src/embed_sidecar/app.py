"""HTTP layer: two routes, exact bodies per PROTOCOL.md.

Request bodies are parsed by hand (rather than through pydantic models)
so malformed JSON and ill-typed payloads answer 400, not a framework
422. The encoder is guarded by a single lock; the model is not assumed
re-entrant.
"""

from __future__ import annotations

import json
import threading

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .encoder import Encoder


def create_app(encoder: Encoder, max_batch: int = 256) -> FastAPI:
    """Build the service around an already-loaded encoder."""
    if max_batch < 1:
        raise ValueError("max_batch must be >= 1")
    app = FastAPI(title="embed-sidecar", docs_url=None, redoc_url=None)
    lock = threading.Lock()

    @app.get("/health")
    def health() -> JSONResponse:
        return JSONResponse({"status": "ok", "model": encoder.model_name})

    @app.post("/embed")
    async def embed(request: Request) -> JSONResponse:
        body = await request.body()
        try:
            payload = json.loads(body)
        except (ValueError, UnicodeDecodeError):
            return JSONResponse({"error": "malformed JSON body"}, status_code=400)
        if not isinstance(payload, dict) or "texts" not in payload:
            return JSONResponse({"error": "missing 'texts' field"}, status_code=400)
        texts = payload["texts"]
        if (
            not isinstance(texts, list)
            or not texts
            or not all(isinstance(t, str) for t in texts)
        ):
            return JSONResponse(
                {"error": "'texts' must be a non-empty list of strings"},
                status_code=400,
            )
        if len(texts) > max_batch:
            return JSONResponse(
                {
                    "error": f"batch of {len(texts)} exceeds max_batch",
                    "max_batch": max_batch,
                },
                status_code=413,
            )
        with lock:
            matrix = encoder.encode(texts)
        return JSONResponse(
            {
                "model": encoder.model_name,
                "dimension": encoder.dimension,
                "embeddings": [row.tolist() for row in matrix],
            }
        )

    return app
