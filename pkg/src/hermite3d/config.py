"""Run configuration: the JSON schema shared by the CLI and the service.

A config validates before anything is allocated; a rejected config
produces one diagnostic naming the offending key.  Initial conditions
are lists of terms; `separable` terms give the three per-axis factors
explicitly, while `plane_wave` and `random_modes` are convenience kinds
expanded into separable terms (random_modes uses the config seed).
"""

from __future__ import annotations

from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from .problems import Constant, FourierMode, Monomial, SeparableIC, plane_wave

__all__ = [
    "RunConfig",
    "ConfigError",
    "build_ic",
    "parse_config",
    "format_validation_error",
]


class ConfigError(ValueError):
    """Invalid run configuration; message names the offending key."""


class FourierFactor(BaseModel):
    kind: Literal["fourier"] = "fourier"
    amplitude: float = 1.0
    wavenumber: int = 1
    phase: float = 0.0


class ConstantFactor(BaseModel):
    kind: Literal["constant"] = "constant"
    value: float = 1.0


class MonomialFactor(BaseModel):
    kind: Literal["monomial"] = "monomial"
    degree: int = Field(default=1, ge=0)


FactorSpec = Union[FourierFactor, ConstantFactor, MonomialFactor]


class SeparableTerm(BaseModel):
    kind: Literal["separable"] = "separable"
    factors: tuple[FactorSpec, FactorSpec, FactorSpec]


class PlaneWaveTerm(BaseModel):
    kind: Literal["plane_wave"] = "plane_wave"
    wavenumber: int = 1
    amplitude: float = 1.0
    phase: float = 0.0


class RandomModesTerm(BaseModel):
    kind: Literal["random_modes"] = "random_modes"
    terms: int = Field(default=4, ge=1)
    max_wavenumber: int = Field(default=2, ge=1)


IcTerm = Union[SeparableTerm, PlaneWaveTerm, RandomModesTerm]


class RunConfig(BaseModel):
    """Everything one run needs; flags may override file values upstream."""

    order_n: int = Field(ge=0, le=4)
    cells: tuple[int, int, int]
    domain: tuple[float, float, float] = (1.0, 1.0, 1.0)
    cfl: float = Field(default=0.9, gt=0.0, le=1.0)
    stages_q: Optional[int] = Field(default=None, ge=1)
    steps: Optional[int] = Field(default=None, ge=1)
    final_time: Optional[float] = Field(default=None, gt=0.0)
    mode: Literal["fused", "two_pass"] = "fused"
    tile_x1: Optional[int] = Field(default=None, ge=1)
    precision: Literal["double", "single"] = "double"
    ic: list[IcTerm] = Field(default_factory=lambda: [PlaneWaveTerm()], min_length=1)
    seed: int = 0
    out_dir: str = "out"
    deterministic: bool = False
    threads: Optional[int] = Field(default=None, ge=1)

    @field_validator("cells", mode="before")
    @classmethod
    def _cube_shorthand(cls, v):
        if isinstance(v, int):
            return (v, v, v)
        return v

    @field_validator("cells")
    @classmethod
    def _positive_cells(cls, v):
        if any(m < 1 for m in v):
            raise ValueError("all cell counts must be >= 1")
        return v

    @field_validator("domain")
    @classmethod
    def _positive_domain(cls, v):
        if any(not (l > 0) for l in v):
            raise ValueError("all domain lengths must be positive")
        return v

    @model_validator(mode="after")
    def _steps_xor_final_time(self):
        if (self.steps is None) == (self.final_time is None):
            raise ValueError("exactly one of steps / final_time must be set")
        if self.tile_x1 is not None and self.tile_x1 > self.cells[0]:
            raise ValueError(f"tile_x1 {self.tile_x1} exceeds cells along x1 ({self.cells[0]})")
        return self

    def stages(self) -> int:
        return self.stages_q if self.stages_q is not None else 3 * (2 * self.order_n + 1)


def _factor(spec: FactorSpec):
    if isinstance(spec, FourierFactor):
        return FourierMode(amplitude=spec.amplitude, wavenumber=spec.wavenumber, phase=spec.phase)
    if isinstance(spec, ConstantFactor):
        return Constant(value=spec.value)
    return Monomial(degree=spec.degree)


def build_ic(cfg: RunConfig) -> SeparableIC:
    """Expand the config's IC terms into a concrete separable IC."""
    terms = []
    rng = np.random.default_rng(cfg.seed)
    for term in cfg.ic:
        if isinstance(term, SeparableTerm):
            terms.append(tuple(_factor(f) for f in term.factors))
        elif isinstance(term, PlaneWaveTerm):
            terms.extend(plane_wave(term.wavenumber, term.amplitude, term.phase).terms)
        else:  # random_modes: random per-axis fourier products, reproducible by seed
            for _ in range(term.terms):
                factors = tuple(
                    FourierMode(
                        amplitude=float(rng.uniform(-1.0, 1.0)),
                        wavenumber=int(rng.integers(1, term.max_wavenumber + 1)),
                        phase=float(rng.uniform(0.0, 2 * np.pi)),
                    )
                    for _ in range(3)
                )
                terms.append(factors)
    return SeparableIC(terms=tuple(terms))


def format_validation_error(err: ValidationError) -> str:
    first = err.errors()[0]
    loc = ".".join(str(p) for p in first["loc"]) or "config"
    return f"{loc}: {first['msg']}"


def parse_config(raw: dict) -> RunConfig:
    """Validate a raw mapping; raises ConfigError naming the offending key."""
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as err:
        raise ConfigError(format_validation_error(err)) from err
