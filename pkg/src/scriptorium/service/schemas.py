"""Request/response models for the review and normalization service.

Field names here are frozen: the browser UI builds against them.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class PairView(BaseModel):
    pair_id: str
    source: str
    target: str
    original_source: str
    original_target: str
    status: str
    language: str
    match_rate: float | None = None
    lineage: dict = Field(default_factory=dict)
    notes: str | None = None
    annotator: str | None = None
    decided_at: float | None = None


class PairList(BaseModel):
    pairs: list[PairView]


class DecisionRequest(BaseModel):
    status: str = Field(pattern="^(pending|accepted|rejected|edited)$")
    annotator: str = Field(min_length=1)
    corrected_source: str | None = None
    corrected_target: str | None = None
    notes: str | None = None


class StatsResponse(BaseModel):
    total: int
    decisions: int
    by_status: dict[str, int]


class MarkerEntry(BaseModel):
    from_cp: str = Field(alias="from")
    to_cp: str = Field(alias="to")

    model_config = {"populate_by_name": True}


class MarkerTableResponse(BaseModel):
    version: str
    entries: list[MarkerEntry]


class NormalizeRequest(BaseModel):
    id: str
    text: str
    language: str = "lat"


class NormalizeResponse(BaseModel):
    id: str
    text: str
    applied_rules: list[dict] = Field(default_factory=list)


class HealthResponse(BaseModel):
    status: str
    pairs: int
