"""Analytic flop/byte models, wall-clock profiling, roofline accounting.

"Bytes" are modeled global traffic (gathers, scatters, coefficient-field
reads/writes), not hardware counters, so arithmetic intensity is a
machine-independent property of the kernel.  Counts per cell, with
s = 2N+2 coefficients per axis, v = (N+1)^3 values per vertex block,
q evolution stages and w bytes per word:

    reconstruction flops   6 s^4            (three dense sweeps, 2 flops/MAC)
    evolution flops        q (6 + 2) s^3    (sparse derivative MACs + axpy)
    monolithic flops       sum of the two

    gather bytes           (4 + 4(T+1)/T) v w   for x1 chains of T cells:
                           4 resident blocks per cell plus the amortized
                           once-per-station loads of the chain
    scatter bytes          v w              (evolved node DOFs)
    coefficient traffic    s^3 w            per write and per read (two-pass only)

The roofline ceiling for a kernel of arithmetic intensity I on a device
with peak bandwidth B and peak rate F is min(I * B, F).
"""

from __future__ import annotations

import statistics
import time
import warnings
from dataclasses import dataclass, asdict

import numpy as np

from . import gridkernels
from .field import DofField, GridSpec, PRECISION_DTYPES
from .pipeline import OperatorSet, StepConfig, _factor_arrays, resolve_tile_x1, tile_schedule

__all__ = [
    "DevicePeaks",
    "KernelProfile",
    "KERNEL_IDS",
    "model_counts",
    "roofline_ceiling",
    "profile_run",
    "report_dict",
]

KERNEL_IDS = ("reconstruction", "evolution", "monolithic")

# Nominal figures for the device class the traffic model was tuned against;
# real measurements on other machines keep the same intensity axis.
DEFAULT_PEAK_BANDWIDTH = 224.0  # GB/s
DEFAULT_PEAK_GFLOPS = 4612.0


@dataclass(frozen=True)
class DevicePeaks:
    """Peak bandwidth (GB/s) and flop rate (GFLOP/s) used for ceilings."""

    peak_bandwidth: float = DEFAULT_PEAK_BANDWIDTH
    peak_gflops: float = DEFAULT_PEAK_GFLOPS
    source: str = "nominal defaults"

    def __post_init__(self):
        if not (self.peak_bandwidth > 0 and self.peak_gflops > 0):
            raise ValueError("device peaks must be positive")


@dataclass
class KernelProfile:
    """Modeled counts plus measured rates for one kernel invocation set."""

    kernel: str
    order_n: int
    mode: str
    tile_x1: int
    flops_modeled: int
    bytes_modeled: int
    wall_time: float
    achieved_gflops: float
    achieved_bandwidth: float
    arithmetic_intensity: float
    ceiling: float
    efficiency: float


def _num_cells(grid) -> int:
    if isinstance(grid, GridSpec):
        return grid.num_cells
    return int(grid)


def _per_cell_flops(kernel: str, order_n: int, stages_q: int) -> int:
    side = 2 * order_n + 2
    recon = 6 * side ** 4
    evolve = stages_q * 8 * side ** 3
    if kernel == "reconstruction":
        return recon
    if kernel == "evolution":
        return evolve
    if kernel == "monolithic":
        return recon + evolve
    raise ValueError(f"unknown kernel id {kernel!r}")


def _per_cell_bytes(kernel: str, order_n: int, tile_x1: int, word: int) -> float:
    npts = order_n + 1
    block = npts ** 3
    side = 2 * order_n + 2
    gather = (4 + 4 * (tile_x1 + 1) / tile_x1) * block
    scatter = block
    coeff = side ** 3
    if kernel == "reconstruction":
        values = gather + coeff
    elif kernel == "evolution":
        values = coeff + scatter
    elif kernel == "monolithic":
        values = gather + scatter
    else:
        raise ValueError(f"unknown kernel id {kernel!r}")
    return values * word


def model_counts(kernel: str, order_n: int, grid, cfg: StepConfig) -> tuple[int, int]:
    """Deterministic modeled (flops, bytes) for one grid-wide kernel pass."""
    cells = _num_cells(grid)
    if cells == 0:
        return 0, 0
    stages_q = cfg.stages(order_n)
    m1 = grid.cells_per_axis[0] if isinstance(grid, GridSpec) else cells
    tile = resolve_tile_x1(kernel, order_n, m1, cfg.tile_x1)
    word = np.dtype(PRECISION_DTYPES[cfg.precision]).itemsize
    flops = cells * _per_cell_flops(kernel, order_n, stages_q)
    bytes_ = cells * _per_cell_bytes(kernel, order_n, tile, word)
    return int(flops), int(round(bytes_))


def roofline_ceiling(intensity: float, peaks: DevicePeaks) -> float:
    """min(intensity x peak bandwidth, peak GFLOP/s)."""
    if intensity < 0:
        raise ValueError(f"arithmetic intensity must be >= 0, got {intensity}")
    return min(intensity * peaks.peak_bandwidth, peaks.peak_gflops)


def _profile(kernel, order_n, mode, tile, flops, bytes_, wall, peaks) -> KernelProfile:
    gflops = flops / wall / 1e9 if wall > 0 else 0.0
    gbps = bytes_ / wall / 1e9 if wall > 0 else 0.0
    intensity = flops / bytes_ if bytes_ else 0.0
    ceiling = roofline_ceiling(intensity, peaks)
    return KernelProfile(
        kernel=kernel,
        order_n=order_n,
        mode=mode,
        tile_x1=tile,
        flops_modeled=flops,
        bytes_modeled=bytes_,
        wall_time=wall,
        achieved_gflops=gflops,
        achieved_bandwidth=gbps,
        arithmetic_intensity=intensity,
        ceiling=ceiling,
        efficiency=gflops / ceiling if ceiling > 0 else 0.0,
    )


def profile_run(
    cfg: StepConfig,
    grid: GridSpec,
    order_n: int,
    repetitions: int = 3,
    peaks: DevicePeaks | None = None,
    rng_seed: int = 0,
) -> list[KernelProfile]:
    """Median-of-runs wall times for the kernels of cfg.mode on `grid`.

    Each kernel is warmed up once (JIT) and then timed `repetitions`
    times on a seeded random field; modeled counts come from
    model_counts, so two identical calls produce identical counts.
    """
    if repetitions < 3:
        raise ValueError(f"repetitions must be >= 3 (median of runs), got {repetitions}")
    peaks = peaks or DevicePeaks()
    dtype = PRECISION_DTYPES[cfg.precision]
    ops = OperatorSet.for_grid(grid, order_n)
    q = cfg.stages(order_n)
    dt = cfg.cfl * min(grid.spacings)
    h_mat, fac1, fac2, fac3, cfac = _factor_arrays(ops, dtype, dt / 2, q)
    m1, m2, m3 = grid.cells_per_axis
    npts = order_n + 1
    s = ops.side
    rng = np.random.default_rng(rng_seed)
    src = rng.uniform(-1.0, 1.0, (m3, m2, m1, npts, npts, npts)).astype(dtype)
    dst = np.zeros_like(src)

    def timed(label, fn):
        fn()  # warmup / JIT
        samples = []
        for _ in range(repetitions):
            t0 = time.perf_counter()
            fn()
            samples.append(time.perf_counter() - t0)
        wall = statistics.median(samples)
        if wall < 1e-3:
            warnings.warn(
                f"{label} median wall time {wall * 1e3:.3f} ms is below timer resolution "
                f"comfort (1 ms); use a larger grid",
                RuntimeWarning,
                stacklevel=3,
            )
        return wall

    profiles = []
    if cfg.mode == "fused":
        tile = resolve_tile_x1("monolithic", order_n, m1, cfg.tile_x1)
        tiles = tile_schedule(grid, tile)
        wall = timed("monolithic", lambda: gridkernels.fused_pass(
            src, dst, h_mat, fac1, fac2, fac3, cfac, tiles, 0))
        flops, bytes_ = model_counts("monolithic", order_n, grid, cfg)
        profiles.append(_profile("monolithic", order_n, cfg.mode, tile, flops, bytes_, wall, peaks))
    else:
        coeff = np.empty((m3, m2, m1, s, s, s), dtype=dtype)
        tile_r = resolve_tile_x1("reconstruction", order_n, m1, cfg.tile_x1)
        tiles_r = tile_schedule(grid, tile_r)
        wall = timed("reconstruction", lambda: gridkernels.recon_pass(
            src, coeff, h_mat, tiles_r, 0))
        flops, bytes_ = model_counts("reconstruction", order_n, grid, cfg)
        profiles.append(_profile("reconstruction", order_n, cfg.mode, tile_r, flops, bytes_, wall, peaks))

        tile_e = resolve_tile_x1("evolution", order_n, m1, cfg.tile_x1)
        tiles_e = tile_schedule(grid, tile_e)
        wall = timed("evolution", lambda: gridkernels.evolve_pass(
            coeff, dst, fac1, fac2, fac3, cfac, tiles_e))
        flops, bytes_ = model_counts("evolution", order_n, grid, cfg)
        profiles.append(_profile("evolution", order_n, cfg.mode, tile_e, flops, bytes_, wall, peaks))
    return profiles


def report_dict(profiles: list[KernelProfile], peaks: DevicePeaks) -> dict:
    """JSON-ready report: device peaks plus one entry per profiled run."""
    runs = []
    flagged = []
    for p in profiles:
        runs.append({
            "kernel": p.kernel,
            "N": p.order_n,
            "mode": p.mode,
            "tile_x1": p.tile_x1,
            "flops": p.flops_modeled,
            "bytes": p.bytes_modeled,
            "seconds": p.wall_time,
            "gflops": p.achieved_gflops,
            "gbps": p.achieved_bandwidth,
            "intensity": p.arithmetic_intensity,
            "ceiling": p.ceiling,
            "efficiency": p.efficiency,
        })
        if p.efficiency > 1.0:
            flagged.append(f"{p.kernel} (N={p.order_n}) efficiency {p.efficiency:.3f} exceeds ceiling")
    report = {
        "device": {"bw": peaks.peak_bandwidth, "flops": peaks.peak_gflops, "source": peaks.source},
        "runs": runs,
    }
    if flagged:
        report["warnings"] = flagged
    return report


REPORT_COLUMNS = ["kernel", "N", "mode", "tile_x1", "flops", "bytes", "seconds",
                  "gflops", "gbps", "intensity", "ceiling", "efficiency"]
