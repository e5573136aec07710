"""FastAPI app implementing the victim wire protocol.

Errors are always ``{"error": string}`` with a non-200 status: 400 for
malformed bodies, 413 for oversized batches, 429 when the concurrency gate is
saturated, 501 when an optional capability (MLM, encoder) is not configured.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .backends import CapabilityMissing, ServedModel

BATCH_CAP = 32


class PredictRequest(BaseModel):
    texts: list[str] = Field(min_length=1)


class MlmRequest(BaseModel):
    text: str
    mask_index: int = Field(ge=0)
    top_k: int = Field(ge=1, le=200)


class EncodeRequest(BaseModel):
    texts: list[str] = Field(min_length=1)


def create_app(model: ServedModel, max_concurrency: int = 64) -> FastAPI:
    app = FastAPI(title="toxvictim server")
    gate = threading.Semaphore(max_concurrency)

    @app.exception_handler(RequestValidationError)
    async def _validation(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(CapabilityMissing)
    async def _capability(request: Request, exc: CapabilityMissing):
        return JSONResponse(status_code=501, content={"error": str(exc)})

    def guarded(fn):
        if not gate.acquire(blocking=False):
            return JSONResponse(status_code=429, content={"error": "overloaded"})
        try:
            return fn()
        finally:
            gate.release()

    @app.get("/healthz")
    def healthz():
        return {"task": model.task, "labels": model.labels, "mode": model.mode}

    @app.post("/v1/predict")
    def predict(request: PredictRequest):
        if len(request.texts) > BATCH_CAP:
            return JSONResponse(
                status_code=413,
                content={"error": f"batch of {len(request.texts)} exceeds "
                                  f"cap {BATCH_CAP}"})
        return guarded(lambda: {
            "task": model.task,
            "labels": model.labels,
            "probs": model.predict(request.texts),
        })

    @app.post("/v1/mlm")
    def mlm(request: MlmRequest):
        return guarded(lambda: {
            "candidates": model.mlm(request.text, request.mask_index,
                                    request.top_k)})

    @app.post("/v1/encode")
    def encode(request: EncodeRequest):
        if len(request.texts) > BATCH_CAP:
            return JSONResponse(
                status_code=413,
                content={"error": f"batch of {len(request.texts)} exceeds "
                                  f"cap {BATCH_CAP}"})
        return guarded(lambda: {"vectors": model.encode(request.texts)})

    return app
