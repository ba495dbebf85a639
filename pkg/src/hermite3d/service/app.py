"""FastAPI service wrapping the solver.

The endpoint handlers are plain functions over the schema models, so the
CLI can invoke them in-process (its default "local" transport) while a
deployed instance serves the same contracts over HTTP.

Error mapping: invalid configs are 400 (detail names the offending key;
schema-level failures surface as FastAPI's usual 422); a run that goes
numerically unstable is a completed request and returns status
"unstable" with the failing step and node.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__, runner
from ..config import ConfigError
from ..pipeline import InstabilityError
from .schemas import (
    AutotuneRequest,
    AutotuneResponse,
    BenchRequest,
    BenchResponse,
    ConvergeRequest,
    ConvergeResponse,
    HealthResponse,
    RunRequest,
    RunResponse,
)

__all__ = ["app", "create_app", "run", "converge", "bench", "autotune", "health"]


def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


def run(request: RunRequest) -> RunResponse:
    try:
        result = runner.execute_run(request.config, write_artifacts=request.write_artifacts)
    except ConfigError as err:
        raise HTTPException(status_code=400, detail=str(err)) from err
    except InstabilityError as err:
        return RunResponse(
            status="unstable",
            unstable_step=err.step,
            unstable_node=err.node,
            mode=request.config.mode,
            order_n=request.config.order_n,
            message=str(err),
        )
    return RunResponse(**result)


def converge(request: ConvergeRequest) -> ConvergeResponse:
    try:
        result = runner.execute_converge(request.config, request.levels)
    except ConfigError as err:
        raise HTTPException(status_code=400, detail=str(err)) from err
    return ConvergeResponse(**result)


def bench(request: BenchRequest) -> BenchResponse:
    try:
        result = runner.execute_bench(request.config, repetitions=request.repetitions,
                                      modes=request.modes)
    except ConfigError as err:
        raise HTTPException(status_code=400, detail=str(err)) from err
    return BenchResponse(**result)


def autotune(request: AutotuneRequest) -> AutotuneResponse:
    try:
        result = runner.execute_autotune(request.config, request.candidates,
                                         repetitions=request.repetitions)
    except ConfigError as err:
        raise HTTPException(status_code=400, detail=str(err)) from err
    return AutotuneResponse(**result)


def create_app() -> FastAPI:
    api = FastAPI(title="hermite3d solver service", version=__version__)
    api.get("/v1/health", response_model=HealthResponse)(health)
    api.post("/v1/run", response_model=RunResponse)(run)
    api.post("/v1/converge", response_model=ConvergeResponse)(converge)
    api.post("/v1/bench", response_model=BenchResponse)(bench)
    api.post("/v1/autotune", response_model=AutotuneResponse)(autotune)
    return api


app = create_app()
