"""Grid time stepping: two-pass and fused half-step pipelines.

A full step is two half steps: primary -> dual -> primary, each one
gather / reconstruct / evolve(dt/2) / scatter over every cell of the
source parity.  `two_pass` materializes the reconstructed coefficients
for the whole grid between the passes; `fused` runs both per cell with
no global intermediate.  Both modes execute the identical per-cell
arithmetic, so their results agree to the last bit; the spec-level
guarantee is 1e-13 relative.

Tiling: work is split into chains of `tile_x1` consecutive cells along
x1.  Tiles are independent (no two write the same destination node), so
the worker pool / thread count never changes results.  The default
tile length per (kernel, N) follows the block sizes that measured best
in the GPU study this code models; they are recorded as nominal
defaults, not assumed optimal here.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import numba

from . import gridkernels
from .field import DofField, GridSpec
from .kernels import default_stages
from .operators import DerivOperator, InterpOperator, build_deriv_operator, build_interp_operator

__all__ = [
    "StepConfig",
    "CoeffField",
    "OperatorSet",
    "AllocationStats",
    "InstabilityError",
    "select_dt",
    "tile_schedule",
    "half_step",
    "full_step",
    "resolve_tile_x1",
    "set_worker_threads",
    "DEFAULT_TILE_X1",
]

MODES = ("two_pass", "fused")
ADVECTION_SPEED = 1.0  # unit speed along each axis

# Nominal per-kernel tile defaults for N = 1, 2, 3 (GPU block sizes from the
# study this code models); clamped to M1 at use, overridable everywhere.
DEFAULT_TILE_X1 = {
    "reconstruction": {1: 16, 2: 10, 3: 4},
    "evolution": {1: 16, 2: 10, 3: 2},
    "monolithic": {1: 12, 2: 10, 3: 2},
}


class InstabilityError(RuntimeError):
    """Non-finite values appeared in a destination field."""

    def __init__(self, node, step: int | None = None):
        self.node = tuple(int(x) for x in node)
        self.step = step
        at = f" at step {step}" if step is not None else ""
        super().__init__(f"non-finite values detected{at}, first offending node {self.node}")


@dataclass(frozen=True)
class StepConfig:
    """Execution knobs for a half/full step."""

    mode: str = "fused"
    tile_x1: int | None = None
    cfl: float = 0.9
    stages_q: int | None = None
    precision: str = "double"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.tile_x1 is not None and self.tile_x1 < 1:
            raise ValueError(f"tile_x1 must be >= 1, got {self.tile_x1}")
        if not 0 < self.cfl <= 1:
            raise ValueError(f"cfl must be in (0, 1], got {self.cfl}")
        if self.stages_q is not None and self.stages_q < 1:
            raise ValueError(f"stages_q must be >= 1, got {self.stages_q}")

    def stages(self, order_n: int) -> int:
        return self.stages_q if self.stages_q is not None else default_stages(order_n)


@dataclass
class CoeffField:
    """Grid-wide reconstructed coefficients (two-pass intermediate only)."""

    parity: str
    data: np.ndarray


@dataclass(frozen=True)
class OperatorSet:
    """Immutable per-(N, grid) operator bundle shared by all workers."""

    order_n: int
    interp: InterpOperator
    derivs: tuple[DerivOperator, DerivOperator, DerivOperator]

    @classmethod
    def for_grid(cls, grid: GridSpec, order_n: int) -> "OperatorSet":
        h1, h2, h3 = grid.spacings
        return cls(
            order_n=order_n,
            interp=build_interp_operator(order_n),
            derivs=(
                build_deriv_operator(order_n, h1),
                build_deriv_operator(order_n, h2),
                build_deriv_operator(order_n, h3),
            ),
        )

    @property
    def interp_triple(self):
        return (self.interp, self.interp, self.interp)

    @property
    def side(self) -> int:
        return 2 * self.order_n + 2


class AllocationStats:
    """Tracks grid-sized auxiliary allocations made by the pipeline.

    Counts the global intermediates a half step allocates (the
    coefficient field in two-pass mode); per-tile local buffers are
    O((2N+2)^3) per worker and are not grid-scale.
    """

    def __init__(self):
        self.events: list[tuple[str, int]] = []
        self._live: dict[str, int] = {}
        self.live_bytes = 0
        self.peak_aux_bytes = 0

    def allocate(self, name: str, nbytes: int) -> None:
        self.events.append((name, nbytes))
        self._live[name] = nbytes
        self.live_bytes += nbytes
        self.peak_aux_bytes = max(self.peak_aux_bytes, self.live_bytes)

    def release(self, name: str) -> None:
        self.live_bytes -= self._live.pop(name, 0)


def select_dt(grid: GridSpec, cfg: StepConfig) -> float:
    """Largest stable step under the boundary-to-center bound, scaled by cfl.

    A wave moving at unit speed covers h/2 in time h/2; the half step is
    dt/2, so dt = cfl * min_k h_k saturates the bound at cfl = 1.
    """
    if not 0 < cfg.cfl <= 1:
        raise ValueError(f"cfl must be in (0, 1], got {cfg.cfl}")
    return cfg.cfl * min(grid.spacings) / ADVECTION_SPEED


def resolve_tile_x1(kernel: str, order_n: int, m1: int, override: int | None = None) -> int:
    """Tile length for a kernel: explicit override, else the nominal default."""
    if override is not None:
        if not 1 <= override <= m1:
            raise ValueError(f"tile_x1 must be in [1, {m1}], got {override}")
        return override
    table = DEFAULT_TILE_X1.get(kernel, DEFAULT_TILE_X1["monolithic"])
    return max(1, min(m1, table.get(order_n, 4)))


def tile_schedule(grid: GridSpec, tile_x1: int) -> np.ndarray:
    """Partition all cells into x1 chains: rows [c3, c2, x1_start, x1_len].

    Every (c2, c3) line is cut into ceil(M1 / tile_x1) tiles, the last one
    short when M1 is not divisible.  Row order is the fixed traversal
    order used by deterministic runs.
    """
    m1 = grid.cells_per_axis[0]
    if not 1 <= tile_x1 <= m1:
        raise ValueError(f"tile_x1 must be in [1, {m1}], got {tile_x1}")
    return gridkernels.make_tiles(grid.cells_per_axis, tile_x1)


def set_worker_threads(n: int | None) -> int:
    """Set the worker-pool size for tile execution; returns the value in effect."""
    if n is not None:
        n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
        numba.set_num_threads(n)
    return numba.get_num_threads()


def _factor_arrays(ops: OperatorSet, dtype, delta: float, q: int):
    """Kernel-side scale factors, pre-cast to the field dtype."""
    s = ops.side
    h_mat = ops.interp.matrix.astype(dtype)
    facs = []
    for d in ops.derivs:
        fac = np.zeros(s, dtype=dtype)
        fac[:-1] = (np.arange(1, s) * (1.0 / d.spacing)).astype(dtype)
        facs.append(fac)
    cfac = np.asarray([delta / k for k in range(1, q + 1)], dtype=dtype)
    return h_mat, facs[0], facs[1], facs[2], cfac


def _check_finite(dst: DofField, step: int | None = None) -> None:
    finite = np.isfinite(dst.data)
    if finite.all():
        return
    m3, m2, m1 = np.argwhere(~finite)[0][:3]
    raise InstabilityError(node=(m1, m2, m3), step=step)


def half_step(
    src: DofField,
    dst: DofField,
    cfg: StepConfig,
    ops: OperatorSet,
    stats: AllocationStats | None = None,
    dt: float | None = None,
    step_index: int | None = None,
    timings: dict | None = None,
) -> None:
    """Advance src's DOFs by dt/2 onto the opposite-parity field dst.

    `timings`, when given, accumulates per-kernel wall seconds under the
    keys "monolithic" / "reconstruction" / "evolution".
    """
    if src.grid.parity == dst.grid.parity:
        raise ValueError(f"src and dst must have opposite parity, both are {src.grid.parity!r}")
    if src.data is dst.data:
        raise ValueError("src and dst must be disjoint fields")
    if src.grid.cells_per_axis != dst.grid.cells_per_axis or src.order_n != dst.order_n:
        raise ValueError("src and dst must share grid dimensions and order")
    if dt is None:
        dt = select_dt(src.grid, cfg)
    q = cfg.stages(ops.order_n)
    delta = dt / 2
    off = 0 if src.grid.parity == "primary" else -1
    kernel = "monolithic" if cfg.mode == "fused" else "reconstruction"
    tile = resolve_tile_x1(kernel, ops.order_n, src.grid.cells_per_axis[0], cfg.tile_x1)
    tiles = tile_schedule(src.grid, tile)
    h_mat, fac1, fac2, fac3, cfac = _factor_arrays(ops, src.data.dtype, delta, q)

    if cfg.mode == "fused":
        t0 = time.perf_counter()
        gridkernels.fused_pass(src.data, dst.data, h_mat, fac1, fac2, fac3, cfac, tiles, off)
        if timings is not None:
            timings["monolithic"] = timings.get("monolithic", 0.0) + time.perf_counter() - t0
    else:
        m1, m2, m3 = src.grid.cells_per_axis
        s = ops.side
        coeff = np.empty((m3, m2, m1, s, s, s), dtype=src.data.dtype)
        if stats is not None:
            stats.allocate("coeff_field", coeff.nbytes)
        try:
            t0 = time.perf_counter()
            gridkernels.recon_pass(src.data, coeff, h_mat, tiles, off)
            t1 = time.perf_counter()
            # barrier between passes: recon_pass returns before evolution starts
            gridkernels.evolve_pass(coeff, dst.data, fac1, fac2, fac3, cfac, tiles)
            t2 = time.perf_counter()
            if timings is not None:
                timings["reconstruction"] = timings.get("reconstruction", 0.0) + t1 - t0
                timings["evolution"] = timings.get("evolution", 0.0) + t2 - t1
        finally:
            if stats is not None:
                stats.release("coeff_field")
            del coeff
    _check_finite(dst, step_index)


def full_step(
    state: DofField,
    scratch: DofField,
    cfg: StepConfig,
    ops: OperatorSet,
    stats: AllocationStats | None = None,
    dt: float | None = None,
    step_index: int | None = None,
    timings: dict | None = None,
) -> None:
    """One full dt: primary -> dual -> primary (state is updated in place)."""
    if state.grid.parity != "primary" or scratch.grid.parity != "dual":
        raise ValueError("full_step expects state on the primary grid and scratch on the dual grid")
    if dt is None:
        dt = select_dt(state.grid, cfg)
    half_step(state, scratch, cfg, ops, stats=stats, dt=dt, step_index=step_index, timings=timings)
    half_step(scratch, state, cfg, ops, stats=stats, dt=dt, step_index=step_index, timings=timings)
