"""Run orchestration: executes configs and writes artifacts.

This is the layer the service endpoints (and the CLI in local mode)
call.  Every entry point takes a validated RunConfig, runs the requested
computation, writes artifacts under cfg.out_dir and returns a JSON-ready
summary dict.

Artifacts per run: snapshot.bin / snapshot.json (final DOF field),
errors.csv (step, time, l_inf, l2; only when an exact solution applies),
perf.json / perf.csv (per-kernel phase rows plus one end-to-end
"solution" row).  Convergence studies write converge.csv, autotune
writes autotune.csv.

Deterministic runs produce byte-identical snapshots and error /
convergence CSVs; the perf artifacts contain wall-clock measurements and
are excluded from that guarantee.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
import time
from pathlib import Path

import numpy as np

from . import perf
from .config import ConfigError, RunConfig, build_ic
from .field import DofField, write_snapshot
from .field import GridSpec
from .pipeline import (
    AllocationStats,
    InstabilityError,
    OperatorSet,
    StepConfig,
    full_step,
    select_dt,
    set_worker_threads,
)
from .problems import compute_error, exact_solution, init_field

__all__ = [
    "execute_run",
    "execute_converge",
    "execute_bench",
    "execute_autotune",
    "InstabilityError",
    "ConfigError",
]


def _step_config(cfg: RunConfig) -> StepConfig:
    return StepConfig(
        mode=cfg.mode,
        tile_x1=cfg.tile_x1,
        cfl=cfg.cfl,
        stages_q=cfg.stages(),
        precision=cfg.precision,
    )


def _plan_steps(cfg: RunConfig, grid: GridSpec, step_cfg: StepConfig) -> tuple[int, float]:
    """Number of full steps and the effective dt.

    With final_time set, dt shrinks just enough that an integer number of
    uniform steps lands exactly on the final time (never above the
    stability bound).
    """
    dt_max = select_dt(grid, step_cfg)
    if cfg.steps is not None:
        return cfg.steps, dt_max
    n = max(1, math.ceil(cfg.final_time / dt_max - 1e-12))
    return n, cfg.final_time / n


def _float_cell(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_float_cell(x) for x in row])


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _perf_rows(cfg: RunConfig, grid: GridSpec, step_cfg: StepConfig,
               timings: dict, n_steps: int, total_seconds: float,
               peaks: perf.DevicePeaks) -> list[perf.KernelProfile]:
    """Phase rows aggregated over the whole run, plus one solution row."""
    kernels = ["monolithic"] if cfg.mode == "fused" else ["reconstruction", "evolution"]
    passes = 2 * n_steps  # two half steps per full step
    rows = []
    total_flops = 0
    total_bytes = 0
    for kernel in kernels:
        flops1, bytes1 = perf.model_counts(kernel, cfg.order_n, grid, step_cfg)
        flops, bytes_ = flops1 * passes, bytes1 * passes
        total_flops += flops
        total_bytes += bytes_
        rows.append(perf._profile(kernel, cfg.order_n, cfg.mode,
                                  perf.resolve_tile_x1(kernel, cfg.order_n,
                                                       grid.cells_per_axis[0], cfg.tile_x1),
                                  flops, bytes_, max(timings.get(kernel, 0.0), 1e-12), peaks))
    rows.append(perf._profile("solution", cfg.order_n, cfg.mode,
                              perf.resolve_tile_x1("monolithic" if cfg.mode == "fused"
                                                   else "reconstruction",
                                                   cfg.order_n, grid.cells_per_axis[0],
                                                   cfg.tile_x1),
                              total_flops, total_bytes, max(total_seconds, 1e-12), peaks))
    return rows


def _write_perf(out_dir: Path, rows: list[perf.KernelProfile], peaks: perf.DevicePeaks,
                stem: str = "perf") -> tuple[Path, Path]:
    report = perf.report_dict(rows, peaks)
    json_path = out_dir / f"{stem}.json"
    csv_path = out_dir / f"{stem}.csv"
    _write_json(json_path, report)
    _write_csv(csv_path, perf.REPORT_COLUMNS,
               [[run[c] for c in perf.REPORT_COLUMNS] for run in report["runs"]])
    return json_path, csv_path


def execute_run(cfg: RunConfig, write_artifacts: bool = True) -> dict:
    """Full time-stepping run; returns summary + artifact paths.

    Raises InstabilityError (with the failing step) if the field goes
    non-finite.
    """
    set_worker_threads(cfg.threads)
    step_cfg = _step_config(cfg)
    grid = GridSpec(cells_per_axis=cfg.cells, domain_lengths=cfg.domain, parity="primary")
    dual = grid.with_parity("dual")
    ops = OperatorSet.for_grid(grid, cfg.order_n)
    ic = build_ic(cfg)
    state = init_field(ic, grid, cfg.order_n, precision=cfg.precision)
    scratch = DofField.zeros(dual, cfg.order_n, precision=cfg.precision)
    n_steps, dt = _plan_steps(cfg, grid, step_cfg)

    track_errors = ic.smoothness_class == "analytic"
    stats = AllocationStats()
    timings: dict = {}
    error_rows = []
    t = 0.0
    if track_errors:
        norms = compute_error(state, exact_solution(ic, t, grid.domain_lengths))
        error_rows.append([0, t, norms.l_inf, norms.l2])

    wall0 = time.perf_counter()
    for step in range(1, n_steps + 1):
        full_step(state, scratch, step_cfg, ops, stats=stats, dt=dt,
                  step_index=step, timings=timings)
        t = step * dt
        if track_errors:
            norms = compute_error(state, exact_solution(ic, t, grid.domain_lengths))
            error_rows.append([step, t, norms.l_inf, norms.l2])
    wall = time.perf_counter() - wall0

    result = {
        "status": "ok",
        "steps": n_steps,
        "dt": dt,
        "final_time": t,
        "mode": cfg.mode,
        "order_n": cfg.order_n,
        "seconds": wall,
        "peak_aux_bytes": stats.peak_aux_bytes,
        "artifacts": {},
    }
    if track_errors:
        result["l_inf"] = error_rows[-1][2]
        result["l2"] = error_rows[-1][3]

    if write_artifacts:
        out_dir = Path(cfg.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        bin_path, json_path = write_snapshot(state, out_dir / "snapshot", time=t)
        result["artifacts"]["snapshot_bin"] = str(bin_path)
        result["artifacts"]["snapshot_json"] = str(json_path)
        if track_errors:
            errors_path = out_dir / "errors.csv"
            _write_csv(errors_path, ["step", "time", "l_inf", "l2"], error_rows)
            result["artifacts"]["errors_csv"] = str(errors_path)
        peaks = perf.DevicePeaks()
        rows = _perf_rows(cfg, grid, step_cfg, timings, n_steps, wall, peaks)
        pj, pc = _write_perf(out_dir, rows, peaks)
        result["artifacts"]["perf_json"] = str(pj)
        result["artifacts"]["perf_csv"] = str(pc)
    return result


def execute_converge(cfg: RunConfig, levels: list[int]) -> dict:
    """Refinement study over cubic grids; observed order between levels."""
    if len(levels) < 2:
        raise ConfigError("levels: need at least two refinement levels")
    if cfg.final_time is None:
        raise ConfigError("final_time: converge requires final_time (not steps)")
    rows = []
    prev = None
    for m in levels:
        level_cfg = cfg.model_copy(update={"cells": (m, m, m), "steps": None})
        summary = execute_run(level_cfg, write_artifacts=False)
        if "l_inf" not in summary:
            raise ConfigError("ic: converge requires an IC with an exact solution")
        l_inf, l2 = summary["l_inf"], summary["l2"]
        h = cfg.domain[0] / m
        if prev is None:
            order_linf = order_l2 = float("nan")
        else:
            ratio = math.log2(m / prev[0])
            order_linf = math.log2(prev[1] / l_inf) / ratio if l_inf > 0 else float("inf")
            order_l2 = math.log2(prev[2] / l2) / ratio if l2 > 0 else float("inf")
        rows.append([m, h, l_inf, l2, order_linf, order_l2])
        prev = (m, l_inf, l2)

    out_dir = Path(cfg.out_dir)
    csv_path = out_dir / "converge.csv"
    _write_csv(csv_path, ["cells", "h", "l_inf", "l2", "order_linf", "order_l2"], rows)
    return {
        "status": "ok",
        "order_n": cfg.order_n,
        "rows": [dict(zip(["cells", "h", "l_inf", "l2", "order_linf", "order_l2"], r))
                 for r in rows],
        "artifacts": {"converge_csv": str(csv_path)},
    }


def execute_bench(cfg: RunConfig, repetitions: int = 3, modes: list[str] | None = None) -> dict:
    """Kernel microbenchmarks plus end-to-end solution timing per mode."""
    set_worker_threads(cfg.threads)
    modes = modes or [cfg.mode]
    peaks = perf.DevicePeaks()
    grid = GridSpec(cells_per_axis=cfg.cells, domain_lengths=cfg.domain, parity="primary")
    all_rows: list[perf.KernelProfile] = []
    for mode in modes:
        mode_cfg = cfg.model_copy(update={"mode": mode})
        step_cfg = _step_config(mode_cfg)
        all_rows.extend(perf.profile_run(step_cfg, grid, cfg.order_n,
                                         repetitions=repetitions, peaks=peaks,
                                         rng_seed=cfg.seed))
        summary = execute_run(mode_cfg, write_artifacts=False)
        n_steps = summary["steps"]
        kernels = ["monolithic"] if mode == "fused" else ["reconstruction", "evolution"]
        flops = sum(perf.model_counts(k, cfg.order_n, grid, step_cfg)[0] for k in kernels)
        bytes_ = sum(perf.model_counts(k, cfg.order_n, grid, step_cfg)[1] for k in kernels)
        all_rows.append(perf._profile(
            "solution", cfg.order_n, mode,
            perf.resolve_tile_x1("monolithic" if mode == "fused" else "reconstruction",
                                 cfg.order_n, grid.cells_per_axis[0], cfg.tile_x1),
            flops * 2 * n_steps, bytes_ * 2 * n_steps, summary["seconds"], peaks))
    out_dir = Path(cfg.out_dir)
    pj, pc = _write_perf(out_dir, all_rows, peaks)
    report = perf.report_dict(all_rows, peaks)
    return {
        "status": "ok",
        "runs": report["runs"],
        "artifacts": {"perf_json": str(pj), "perf_csv": str(pc)},
    }


def execute_autotune(cfg: RunConfig, candidates: list[int], repetitions: int = 3) -> dict:
    """Median-of-N full-step timing per tile candidate; argmin wins, ties go small."""
    if len(candidates) < 2:
        raise ConfigError("candidates: need at least two tile candidates")
    set_worker_threads(cfg.threads)
    grid = GridSpec(cells_per_axis=cfg.cells, domain_lengths=cfg.domain, parity="primary")
    dual = grid.with_parity("dual")
    ops = OperatorSet.for_grid(grid, cfg.order_n)
    ic = build_ic(cfg)
    m1 = cfg.cells[0]
    gather_kernel = "monolithic" if cfg.mode == "fused" else "reconstruction"

    rows = []
    best: tuple[float, int] | None = None
    for tile in candidates:
        if tile > m1:
            rows.append({"tile_x1": tile, "seconds": None, "bytes_modeled": None,
                         "status": f"skipped: exceeds M1={m1}"})
            continue
        step_cfg = StepConfig(mode=cfg.mode, tile_x1=tile, cfl=cfg.cfl,
                              stages_q=cfg.stages(), precision=cfg.precision)
        state = init_field(ic, grid, cfg.order_n, precision=cfg.precision)
        scratch = DofField.zeros(dual, cfg.order_n, precision=cfg.precision)
        dt = select_dt(grid, step_cfg)
        full_step(state, scratch, step_cfg, ops, dt=dt)  # warmup / JIT
        samples = []
        for _ in range(repetitions):
            t0 = time.perf_counter()
            full_step(state, scratch, step_cfg, ops, dt=dt)
            samples.append(time.perf_counter() - t0)
        seconds = statistics.median(samples)
        _, bytes_modeled = perf.model_counts(gather_kernel, cfg.order_n, grid, step_cfg)
        rows.append({"tile_x1": tile, "seconds": seconds,
                     "bytes_modeled": bytes_modeled, "status": "ok"})
        if best is None or (seconds, tile) < best:
            best = (seconds, tile)

    if best is None:
        raise ConfigError(f"candidates: no candidate fits M1={m1}")
    best_tile = best[1]
    for row in rows:
        if row["status"] == "ok" and row["tile_x1"] == best_tile:
            row["status"] = "winner"

    out_dir = Path(cfg.out_dir)
    csv_path = out_dir / "autotune.csv"
    _write_csv(csv_path, ["tile_x1", "seconds", "bytes_modeled", "status"],
               [[r["tile_x1"], "" if r["seconds"] is None else r["seconds"],
                 "" if r["bytes_modeled"] is None else r["bytes_modeled"], r["status"]]
                for r in rows])
    return {
        "status": "ok",
        "best_tile_x1": best_tile,
        "rows": rows,
        "artifacts": {"autotune_csv": str(csv_path)},
    }
