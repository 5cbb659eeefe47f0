"""Request and response bodies for the HTTP service.

Payloads that the core library already validates in depth (space
definitions, serialized models, stored records) travel as plain dicts here;
the envelope is typed, the content is checked by the code that actually
understands it.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class SpaceRef(BaseModel):
    """A search space, either by preset name or as an inline definition."""

    preset: str | None = None
    definition: dict | None = None


class OracleSpec(BaseModel):
    kind: Literal["synthetic"] = "synthetic"
    noise_sigma: float = 0.0
    profile: str = "cpu_like"
    seed: int | None = None
    relevant_weights: dict[str, float] | None = None
    null_features: list[str] | None = None
    interaction_pairs: list[tuple[str, str, float]] | None = None


class TrainSettings(BaseModel):
    learning_rate: float = 0.1
    max_leaves: int = 30
    max_depth: int = 6
    early_stopping_rounds: int = 5
    max_rounds: int = 500
    l2_lambda: float = 1.0
    min_samples_per_leaf: int = 5


class EvolutionSettings(BaseModel):
    population_size: int = 125
    parent_count: int = 25
    mutation_prob: float = 0.3
    max_iterations: int = 30


class HealthResponse(BaseModel):
    status: str
    version: str


class PresetsResponse(BaseModel):
    presets: list[str]


class SpaceShowResponse(BaseModel):
    space: dict


class SpaceValidateResponse(BaseModel):
    ok: bool


class SpaceCountResponse(BaseModel):
    cardinality: int


class SpaceSampleRequest(BaseModel):
    space: SpaceRef
    n: int = Field(ge=1)
    seed: int


class SpaceSampleResponse(BaseModel):
    architectures: list[dict]


class EvaluateRequest(BaseModel):
    space: SpaceRef
    oracle: OracleSpec = OracleSpec()
    n: int = Field(ge=1)
    seed: int


class EvaluateResponse(BaseModel):
    records: list[dict]
    oracle_id: str


class TrainRequest(BaseModel):
    space: SpaceRef
    records: list[dict]
    metric: str = "quality_loss"
    direction: Literal["lower", "higher"] = "lower"
    config: TrainSettings = TrainSettings()
    seed: int
    val_fraction: float = 0.2
    max_pairs: int | None = None


class TrainResponse(BaseModel):
    model: dict
    kind: Literal["ranker", "latency_predictor"]
    report: dict


class ImportanceRequest(BaseModel):
    space: SpaceRef
    records: list[dict]
    model: dict
    seed: int
    theta: float = 1.25
    repetitions: int = 5
    metric: str = "quality_loss"
    direction: Literal["lower", "higher"] = "lower"


class ImportanceResponse(BaseModel):
    report: dict
    kept: list[str]
    table: str


class SearchRequest(BaseModel):
    space: SpaceRef
    model: dict
    seed: int
    strategy: Literal["random", "evolutionary"] = "evolutionary"
    epoch_size: int = 100
    stall_epochs: int = 3
    evolution: EvolutionSettings = EvolutionSettings()
    importance_report: dict | None = None
    theta: float = 1.25
    latency_model: dict | None = None
    max_latency_ms: float | None = None
    candidate_count: int = 3000


class SearchResponse(BaseModel):
    best: dict
    best_score: float
    evaluated_count: int
    trace: list[tuple[int, float]]
    pruned_cardinality: int | None = None


class ReportRequest(BaseModel):
    space: SpaceRef
    records: list[dict]
    model: dict
    metric: str = "quality_loss"
    direction: Literal["lower", "higher"] = "lower"


class ReportResponse(BaseModel):
    metrics: dict
    table: str


class ErrorBody(BaseModel):
    name: str
    category: str
    detail: str


class ErrorResponse(BaseModel):
    error: ErrorBody
