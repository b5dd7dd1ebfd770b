"""HTTP service for the label-logprob protocol.

POST /v1/label_logprobs with ``{"prompt": str, "labels": [str]}`` returns
``{"model": str, "logprobs": [float]}`` with logprobs aligned to the request
labels (natural log). All client errors answer 4xx with ``{"error": str}``.
"""

from __future__ import annotations

from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .config import AdapterConfig
from .scoring import LabelScorer, ScoringError, load_model


class ScoreRequest(BaseModel):
    prompt: str
    labels: list[str]


class ScoreResponse(BaseModel):
    model: str
    logprobs: list[float]


def create_app(scorer: LabelScorer) -> FastAPI:
    app = FastAPI(title="labelprob-adapter")

    @app.exception_handler(RequestValidationError)
    async def malformed_request(request, exc):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(ScoringError)
    async def unscorable_request(request, exc):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.post("/v1/label_logprobs", response_model=ScoreResponse)
    def score(request: ScoreRequest) -> ScoreResponse:
        logprobs = scorer.logprobs(request.prompt, request.labels)
        return ScoreResponse(model=scorer.model_name, logprobs=logprobs)

    @app.get("/healthz")
    def health() -> dict:
        return {"model": scorer.model_name, "status": "ok"}

    return app


def create_app_from_config(config: AdapterConfig) -> FastAPI:
    model, tokenizer = load_model(config)
    return create_app(LabelScorer(model, tokenizer, config))
