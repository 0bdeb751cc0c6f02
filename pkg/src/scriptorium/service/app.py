"""FastAPI service: review workflow plus normalization-as-a-service.

The review endpoints drive the gold-curation UI; the normalize endpoint
speaks the same {id, text, language} -> {id, text} protocol the external-
normalizer adapter expects, so one service instance can also stand in as an
external normalizer for another pipeline.

Authentication is a single shared token: when the service is started with
one, every /api route except /api/health requires it in X-Auth-Token.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import Depends, FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles

from ..abbrev import MarkerTable
from ..normalize import RuleSet, normalize_rules
from ..review import ReviewStore
from .schemas import (
    DecisionRequest,
    HealthResponse,
    MarkerTableResponse,
    NormalizeRequest,
    NormalizeResponse,
    PairList,
    PairView,
    StatsResponse,
)


def create_app(
    store: ReviewStore,
    token: str | None = None,
    rules: RuleSet | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="scriptorium review service", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    ruleset = rules or RuleSet.default()
    markers = MarkerTable.default()

    def authorized(request: Request) -> None:
        if token and request.headers.get("X-Auth-Token") != token:
            raise HTTPException(status_code=401, detail="missing or bad token")

    @app.get("/api/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", pairs=store.stats()["total"])

    @app.get("/api/pairs", response_model=PairList, dependencies=[Depends(authorized)])
    def list_pairs(status: str | None = None) -> PairList:
        return PairList(pairs=[PairView(**v) for v in store.list_pairs(status)])

    @app.get(
        "/api/pairs/{pair_id}",
        response_model=PairView,
        dependencies=[Depends(authorized)],
    )
    def get_pair(pair_id: str) -> PairView:
        try:
            return PairView(**store.view(pair_id))
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown pair {pair_id}")

    @app.post(
        "/api/pairs/{pair_id}/decision",
        response_model=PairView,
        dependencies=[Depends(authorized)],
    )
    def decide(pair_id: str, decision: DecisionRequest) -> PairView:
        try:
            store.decide(
                pair_id,
                status=decision.status,
                annotator=decision.annotator,
                corrected_source=decision.corrected_source,
                corrected_target=decision.corrected_target,
                notes=decision.notes,
            )
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown pair {pair_id}")
        return PairView(**store.view(pair_id))

    @app.get("/api/stats", response_model=StatsResponse, dependencies=[Depends(authorized)])
    def stats() -> StatsResponse:
        return StatsResponse(**store.stats())

    @app.get(
        "/api/markers",
        response_model=MarkerTableResponse,
        dependencies=[Depends(authorized)],
    )
    def marker_table() -> MarkerTableResponse:
        return MarkerTableResponse(**markers.to_record())

    @app.post(
        "/api/normalize",
        response_model=NormalizeResponse,
        dependencies=[Depends(authorized)],
    )
    def normalize(request: NormalizeRequest) -> NormalizeResponse:
        result = normalize_rules(request.text, ruleset, request.language)
        return NormalizeResponse(
            id=request.id, text=result.text, applied_rules=result.applied_rules
        )

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
