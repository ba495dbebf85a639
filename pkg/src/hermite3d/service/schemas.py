"""Request/response models for the solver service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

from ..config import RunConfig

__all__ = [
    "RunRequest",
    "RunResponse",
    "ConvergeRequest",
    "ConvergeRow",
    "ConvergeResponse",
    "BenchRequest",
    "BenchResponse",
    "AutotuneRequest",
    "AutotuneRow",
    "AutotuneResponse",
    "PerfRow",
    "HealthResponse",
]


class RunRequest(BaseModel):
    config: RunConfig
    write_artifacts: bool = True


class RunResponse(BaseModel):
    status: Literal["ok", "unstable"]
    steps: Optional[int] = None
    dt: Optional[float] = None
    final_time: Optional[float] = None
    mode: Optional[str] = None
    order_n: Optional[int] = None
    seconds: Optional[float] = None
    peak_aux_bytes: Optional[int] = None
    l_inf: Optional[float] = None
    l2: Optional[float] = None
    artifacts: dict[str, str] = Field(default_factory=dict)
    unstable_step: Optional[int] = None
    unstable_node: Optional[tuple[int, int, int]] = None
    message: Optional[str] = None


class ConvergeRequest(BaseModel):
    config: RunConfig
    levels: list[int] = Field(min_length=2)


class ConvergeRow(BaseModel):
    cells: int
    h: float
    l_inf: float
    l2: float
    order_linf: float
    order_l2: float


class ConvergeResponse(BaseModel):
    status: Literal["ok"]
    order_n: int
    rows: list[ConvergeRow]
    artifacts: dict[str, str]


class PerfRow(BaseModel):
    kernel: str
    N: int
    mode: str
    tile_x1: int
    flops: int
    bytes: int
    seconds: float
    gflops: float
    gbps: float
    intensity: float
    ceiling: float
    efficiency: float


class BenchRequest(BaseModel):
    config: RunConfig
    repetitions: int = Field(default=3, ge=3)
    modes: Optional[list[Literal["fused", "two_pass"]]] = None


class BenchResponse(BaseModel):
    status: Literal["ok"]
    runs: list[PerfRow]
    artifacts: dict[str, str]


class AutotuneRequest(BaseModel):
    config: RunConfig
    candidates: list[int] = Field(min_length=2)
    repetitions: int = Field(default=3, ge=1)


class AutotuneRow(BaseModel):
    tile_x1: int
    seconds: Optional[float]
    bytes_modeled: Optional[int]
    status: str


class AutotuneResponse(BaseModel):
    status: Literal["ok"]
    best_tile_x1: int
    rows: list[AutotuneRow]
    artifacts: dict[str, str]


class HealthResponse(BaseModel):
    status: Literal["ok"]
    version: str
