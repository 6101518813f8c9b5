"""HTTP facade over the harness.

The handlers are plain functions so the CLI can call them in-process
without a running server; the FastAPI routes only add transport and
error mapping (domain errors become 400 responses, malformed request
bodies are FastAPI's usual 422).
"""

from __future__ import annotations

from contextlib import contextmanager
from typing import Optional

from fastapi import FastAPI, HTTPException, Query

from . import __version__
from .blackbox import ParseError
from .core import ConfigurationError
from .harness import catalogue, run_experiment, run_single
from .schemas import (
    BenchmarkReport,
    CatalogueResponse,
    ExperimentConfig,
    HealthResponse,
)

SERVICE_NAME = "gpbench"


def handle_health() -> HealthResponse:
    return HealthResponse(status="ok", service=SERVICE_NAME, version=__version__)


def handle_catalogue(domain: Optional[str] = None) -> CatalogueResponse:
    return catalogue(domain)


def handle_run(config: ExperimentConfig) -> BenchmarkReport:
    """Single-run entry point: the repetition count is pinned to one."""
    return run_single(config)


def handle_bench(config: ExperimentConfig, workers: int = 1) -> BenchmarkReport:
    return run_experiment(config, workers=workers)


@contextmanager
def _domain_errors_as_400():
    try:
        yield
    except (ConfigurationError, ParseError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


app = FastAPI(title=SERVICE_NAME, version=__version__)


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return handle_health()


@app.get("/catalogue", response_model=CatalogueResponse)
def get_catalogue(domain: Optional[str] = Query(default=None)) -> CatalogueResponse:
    with _domain_errors_as_400():
        return handle_catalogue(domain)


@app.post("/run", response_model=BenchmarkReport)
def post_run(config: ExperimentConfig) -> BenchmarkReport:
    with _domain_errors_as_400():
        return handle_run(config)


@app.post("/bench", response_model=BenchmarkReport)
def post_bench(
    config: ExperimentConfig, workers: int = Query(default=1, ge=1)
) -> BenchmarkReport:
    with _domain_errors_as_400():
        return handle_bench(config, workers)
