"""FastAPI application exposing training, evaluation and the experiment harness."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import ParseError, SketchselError, StreamError, UnsupportedModeError
from ..metrics import MetricKind, evaluate
from . import ops
from .schemas import (
    ErrorBody,
    EvalRequest,
    EvalResponse,
    ExperimentRequest,
    ExperimentResponse,
    MetricName,
    MetricRequest,
    MetricResponse,
    ModelDetail,
    ModelInfo,
    PredictRequest,
    PredictResponse,
    TrainRequest,
    TrainResponse,
)


def _error(status: int, exc: Exception) -> JSONResponse:
    body = ErrorBody(
        error=type(exc).__name__,
        detail=str(exc.args[0]) if exc.args else str(exc),
        record=getattr(exc, "record", None),
        offset=getattr(exc, "offset", None),
    )
    return JSONResponse(status_code=status, content=body.model_dump())


def create_app(registry: ops.Registry | None = None) -> FastAPI:
    app = FastAPI(title="sketchsel", version=__version__)
    app.state.registry = registry or ops.Registry()

    @app.exception_handler(ops.UnknownModelError)
    async def _unknown_model(request: Request, exc: ops.UnknownModelError):
        return _error(404, exc)

    @app.exception_handler(FileNotFoundError)
    async def _missing(request: Request, exc: FileNotFoundError):
        return _error(404, exc)

    @app.exception_handler(ParseError)
    @app.exception_handler(StreamError)
    async def _bad_input(request: Request, exc: SketchselError):
        return _error(422, exc)

    @app.exception_handler(UnsupportedModeError)
    async def _unsupported(request: Request, exc: UnsupportedModeError):
        return _error(400, exc)

    @app.exception_handler(SketchselError)
    @app.exception_handler(ValueError)
    async def _domain(request: Request, exc: Exception):
        return _error(400, exc)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/train", response_model=TrainResponse)
    def train_model(req: TrainRequest) -> TrainResponse:
        return ops.do_train(app.state.registry, req)

    @app.post("/eval", response_model=EvalResponse)
    def eval_model(req: EvalRequest) -> EvalResponse:
        return ops.do_eval(app.state.registry, req)

    @app.post("/predict", response_model=PredictResponse)
    def predict(req: PredictRequest) -> PredictResponse:
        return ops.do_predict(app.state.registry, req)

    @app.post("/metrics/{metric}", response_model=MetricResponse)
    def metric(metric: MetricName, req: MetricRequest) -> MetricResponse:
        report = evaluate(MetricKind(metric), req.scores, req.labels)
        return MetricResponse(metric=metric, value=report.value, samples=report.samples, positives=report.positives)

    @app.post("/experiments", response_model=ExperimentResponse)
    def experiment(req: ExperimentRequest) -> ExperimentResponse:
        return ops.do_experiment(req)

    @app.get("/models", response_model=list[ModelInfo])
    def models() -> list[ModelInfo]:
        return app.state.registry.list()

    @app.get("/models/{model_id}", response_model=ModelDetail)
    def model(model_id: str, limit: int = 100) -> ModelDetail:
        if limit < 0:
            raise HTTPException(400, "limit must be >= 0")
        return ops.model_detail(app.state.registry, model_id, limit)

    return app
