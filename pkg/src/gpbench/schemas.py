"""Pydantic models: experiment configuration, reports, service payloads.

Configuration models are strict (unknown keys are rejected at every
level) because silently ignored hyperparameter typos are the classic way
benchmark numbers go wrong.  Fields left unset fall back to documented
per-model defaults when the experiment is assembled, not here, so a
config echo distinguishes "user said X" from "default applied".
"""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TgpModelParams(_Strict):
    max_depth: int = 12
    init_depth_min: int = 2
    init_depth_max: int = 6
    erc_probability: float = 0.2
    boolean_constants: bool = False
    crossover_retries: int = 3
    functions: Optional[list[str]] = None


class CgpModelParams(_Strict):
    columns: int = 100
    rows: int = 1
    levels_back: Optional[int] = None
    functions: Optional[list[str]] = None


class ModelSection(_Strict):
    name: Literal["tgp", "cgp"]
    scheme: Optional[Literal["generational", "one_plus_lambda"]] = None
    params: Optional[Union[TgpModelParams, CgpModelParams]] = None

    @model_validator(mode="before")
    @classmethod
    def _dispatch_params(cls, data):
        """Validate params against the schema matching the model name."""
        if isinstance(data, dict) and isinstance(data.get("params"), dict):
            data = dict(data)
            schema = TgpModelParams if data.get("name") == "tgp" else CgpModelParams
            data["params"] = schema.model_validate(data["params"])
        return data


class ProblemParams(_Strict):
    """Union of per-domain knobs; the harness rejects fields that do not
    apply to the resolved problem."""

    metric: Optional[Literal["mse", "mae"]] = None
    ideal_epsilon: Optional[float] = None
    count: Optional[int] = Field(None, ge=1)
    low: Optional[float] = None
    high: Optional[float] = None
    seed: Optional[int] = Field(None, ge=0)
    episodes: Optional[int] = Field(None, ge=1)
    max_steps: Optional[int] = Field(None, ge=1)
    gamma: Optional[float] = Field(None, gt=0.0, le=1.0)
    base_seed: Optional[int] = Field(None, ge=0)
    target_return: Optional[float] = None


class ProblemSection(_Strict):
    name: Optional[str] = None
    path: Optional[str] = None
    params: ProblemParams = ProblemParams()

    @model_validator(mode="after")
    def _one_source(self):
        if (self.name is None) == (self.path is None):
            raise ValueError("problem needs exactly one of 'name' or 'path'")
        return self


class HyperparametersSection(_Strict):
    model_config = ConfigDict(
        extra="forbid", populate_by_name=True, serialize_by_alias=True
    )

    population_size: Optional[int] = None
    max_evaluations: Optional[int] = None
    mutation_rate: Optional[float] = None
    crossover_rate: Optional[float] = None
    tournament_size: Optional[int] = None
    elitism: Optional[int] = None
    mu: Optional[int] = None
    lambda_: Optional[int] = Field(None, alias="lambda")
    seed: Optional[int] = Field(None, ge=0)


class RunSection(_Strict):
    repetitions: int = Field(1, ge=1)
    base_seed: int = Field(0, ge=0)
    output: Optional[str] = None
    format: Literal["json", "csv"] = "json"


class ExperimentConfig(_Strict):
    model: ModelSection
    problem: ProblemSection
    hyperparameters: HyperparametersSection = HyperparametersSection()
    run: RunSection = RunSection()


# -- reports -------------------------------------------------------------------

class RunRecord(BaseModel):
    """One seeded run.  wall_ms is measurement, not reproducible content."""

    model_config = ConfigDict(extra="forbid", ser_json_inf_nan="constants")

    seed: int
    best_cost: float
    success: bool
    evaluations_used: int
    evaluations_to_success: Optional[int]
    best_expression: str
    trajectory: list[tuple[int, float]]
    wall_ms: float


class AggregateStats(BaseModel):
    model_config = ConfigDict(extra="forbid", ser_json_inf_nan="constants")

    success_rate: float
    median_best_cost: float
    median_evaluations_to_success: Optional[float]
    mean_wall_ms: float


class BenchmarkReport(BaseModel):
    model_config = ConfigDict(extra="forbid", ser_json_inf_nan="constants")

    config: ExperimentConfig
    representation: str
    problem: str
    scheme: Literal["generational", "one_plus_lambda"]
    runs: list[RunRecord]
    aggregates: AggregateStats


# -- service payloads -----------------------------------------------------------

class HealthResponse(BaseModel):
    status: str
    service: str
    version: str


class CatalogueEntry(BaseModel):
    name: str
    parameters: str
    description: str


class CatalogueDomain(BaseModel):
    domain: str
    entries: list[CatalogueEntry]


class CatalogueResponse(BaseModel):
    domains: list[CatalogueDomain]
    text: str
