"""FastAPI application exposing the attack engine.

Errors follow the shared convention: non-200 responses carry
``{"error": "<message>"}``. Validation problems map to 400, upstream victim
transport failures to 502, and missing capabilities to 501.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import CapabilityError, ConfigError, DataError, ResourceError, TransportError
from ..resources import ResourceBundle
from .ops import EngineOps
from .schemas import (
    AdvTrainRequest,
    AdvTrainResponse,
    AttackRequest,
    AttackResponse,
    BiasRequest,
    BiasResponse,
    EvalRequest,
    EvalResponse,
    HealthResponse,
    TrainRequest,
    TrainResponse,
)


def create_app(resources: ResourceBundle | None = None) -> FastAPI:
    resources = resources or ResourceBundle.load()
    ops = EngineOps(resources)
    app = FastAPI(title="advtox engine", version=__version__)

    @app.exception_handler(RequestValidationError)
    async def _validation(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(ConfigError)
    @app.exception_handler(DataError)
    @app.exception_handler(ResourceError)
    async def _bad_request(request: Request, exc: Exception):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(TransportError)
    async def _upstream(request: Request, exc: TransportError):
        return JSONResponse(status_code=502, content={"error": str(exc)})

    @app.exception_handler(CapabilityError)
    async def _capability(request: Request, exc: CapabilityError):
        return JSONResponse(status_code=501, content={"error": str(exc)})

    @app.get("/healthz", response_model=HealthResponse)
    def healthz() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__,
                              resources=resources.path)

    @app.post("/v1/train", response_model=TrainResponse)
    def train(request: TrainRequest) -> TrainResponse:
        return ops.train(request)

    @app.post("/v1/attack", response_model=AttackResponse)
    def attack(request: AttackRequest) -> AttackResponse:
        return ops.attack(request)

    @app.post("/v1/advtrain", response_model=AdvTrainResponse)
    def advtrain(request: AdvTrainRequest) -> AdvTrainResponse:
        return ops.advtrain(request)

    @app.post("/v1/eval", response_model=EvalResponse)
    def eval_(request: EvalRequest) -> EvalResponse:
        return ops.eval(request)

    @app.post("/v1/bias", response_model=BiasResponse)
    def bias(request: BiasRequest) -> BiasResponse:
        return ops.bias(request)

    return app
