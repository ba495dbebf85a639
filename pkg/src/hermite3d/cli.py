"""Batch front door: a thin client for the solver service.

Subcommands build a request from the config file plus flag overrides and
submit it -- to the in-process service handlers by default, or to a
running instance when --server is given.  Exit codes: 0 success,
2 invalid config, 3 numerical instability.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx
from pydantic import ValidationError

from .config import ConfigError, RunConfig, format_validation_error
from .service import schemas
from .service.app import app as fastapi_app
from .service.app import autotune as autotune_handler
from .service.app import bench as bench_handler
from .service.app import converge as converge_handler
from .service.app import run as run_handler

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_UNSTABLE = 3


class ServiceClient:
    """POSTs requests to a remote service, or calls the handlers in-process."""

    def __init__(self, server: str | None):
        self.server = server.rstrip("/") if server else None
        self._http = httpx.Client(base_url=self.server, timeout=None) if self.server else None

    def _call(self, path: str, request, local_handler, response_model):
        if self._http is None:
            return local_handler(request)
        reply = self._http.post(path, json=request.model_dump(mode="json"))
        if reply.status_code in (400, 422):
            detail = reply.json().get("detail", "invalid request")
            if isinstance(detail, list):  # schema-level 422: loc list + msg
                first = detail[0]
                loc = ".".join(str(p) for p in first.get("loc", [])[1:]) or "config"
                detail = f"{loc}: {first.get('msg', 'invalid value')}"
            raise ConfigError(detail)
        reply.raise_for_status()
        return response_model.model_validate(reply.json())

    def run(self, request: schemas.RunRequest) -> schemas.RunResponse:
        return self._call("/v1/run", request, run_handler, schemas.RunResponse)

    def converge(self, request: schemas.ConvergeRequest) -> schemas.ConvergeResponse:
        return self._call("/v1/converge", request, converge_handler, schemas.ConvergeResponse)

    def bench(self, request: schemas.BenchRequest) -> schemas.BenchResponse:
        return self._call("/v1/bench", request, bench_handler, schemas.BenchResponse)

    def autotune(self, request: schemas.AutotuneRequest) -> schemas.AutotuneResponse:
        return self._call("/v1/autotune", request, autotune_handler, schemas.AutotuneResponse)


def _load_config(config_path: str, overrides: dict) -> RunConfig:
    try:
        raw = json.loads(Path(config_path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config: file not found: {config_path}")
    except json.JSONDecodeError as err:
        raise ConfigError(f"config: invalid JSON: {err}")
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a JSON object")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as err:
        raise ConfigError(format_validation_error(err))


def _common_options(fn):
    fn = click.option("--config", "config_path", required=True,
                      type=click.Path(), help="JSON run config")(fn)
    fn = click.option("--mode", type=click.Choice(["fused", "two_pass"]), default=None,
                      help="Override execution mode")(fn)
    fn = click.option("--tile-x1", type=int, default=None, help="Override tile length along x1")(fn)
    fn = click.option("--threads", type=int, default=None, help="Worker threads for tile execution")(fn)
    fn = click.option("--deterministic", is_flag=True, default=None,
                      help="Fixed traversal order; byte-identical snapshots/CSVs")(fn)
    fn = click.option("--precision", type=click.Choice(["double", "single"]), default=None)(fn)
    fn = click.option("--out-dir", default=None, help="Artifact directory")(fn)
    fn = click.option("--server", default=None, metavar="URL",
                      help="Submit to a running service instead of in-process")(fn)
    fn = click.option("--print-config", is_flag=True, help="Print the resolved config and exit")(fn)
    return fn


def _resolve(config_path, mode, tile_x1, threads, deterministic, precision, out_dir,
             print_config) -> RunConfig | None:
    cfg = _load_config(config_path, {
        "mode": mode,
        "tile_x1": tile_x1,
        "threads": threads,
        "deterministic": deterministic,
        "precision": precision,
        "out_dir": out_dir,
    })
    if print_config:
        click.echo(cfg.model_dump_json(indent=2))
        return None
    return cfg


def _fail_config(err: ConfigError):
    click.echo(f"config error: {err}", err=True)
    sys.exit(EXIT_CONFIG)


@click.group()
def main():
    """Hermite advection solver: runs, convergence studies, benchmarks, autotuning."""


@main.command("run")
@_common_options
def run_cmd(config_path, mode, tile_x1, threads, deterministic, precision, out_dir,
            server, print_config):
    """Execute the configured time-stepping run and write artifacts."""
    try:
        cfg = _resolve(config_path, mode, tile_x1, threads, deterministic, precision,
                       out_dir, print_config)
        if cfg is None:
            return
        reply = ServiceClient(server).run(schemas.RunRequest(config=cfg))
    except ConfigError as err:
        _fail_config(err)
    if reply.status == "unstable":
        click.echo(f"unstable at step {reply.unstable_step}, node {reply.unstable_node}", err=True)
        sys.exit(EXIT_UNSTABLE)
    click.echo(f"ok: {reply.steps} steps of dt={reply.dt:.6g} "
               f"({reply.mode}, N={reply.order_n}) in {reply.seconds:.3f}s")
    if reply.l_inf is not None:
        click.echo(f"errors: l_inf={reply.l_inf:.6e} l2={reply.l2:.6e}")
    for name, path in reply.artifacts.items():
        click.echo(f"wrote {name}: {path}")


@main.command("converge")
@_common_options
@click.option("--levels", required=True, help="Comma-separated cells per axis, e.g. 8,16,32")
def converge_cmd(config_path, mode, tile_x1, threads, deterministic, precision, out_dir,
                 server, print_config, levels):
    """Refinement study: errors and observed orders per level."""
    try:
        cfg = _resolve(config_path, mode, tile_x1, threads, deterministic, precision,
                       out_dir, print_config)
        if cfg is None:
            return
        level_list = [int(x) for x in levels.split(",") if x.strip()]
        reply = ServiceClient(server).converge(
            schemas.ConvergeRequest(config=cfg, levels=level_list))
    except (ConfigError, ValueError) as err:
        _fail_config(ConfigError(str(err)))
    click.echo("cells      h          l_inf         l2            order_linf")
    for row in reply.rows:
        click.echo(f"{row.cells:5d}  {row.h:.6f}  {row.l_inf:.6e}  {row.l2:.6e}  "
                   f"{row.order_linf:.2f}")
    for name, path in reply.artifacts.items():
        click.echo(f"wrote {name}: {path}")


@main.command("bench")
@_common_options
@click.option("--repetitions", type=int, default=3, show_default=True)
@click.option("--modes", default=None, help="Comma-separated modes, e.g. fused,two_pass")
def bench_cmd(config_path, mode, tile_x1, threads, deterministic, precision, out_dir,
              server, print_config, repetitions, modes):
    """Kernel microbenchmarks and end-to-end solution timing."""
    try:
        cfg = _resolve(config_path, mode, tile_x1, threads, deterministic, precision,
                       out_dir, print_config)
        if cfg is None:
            return
        mode_list = [m.strip() for m in modes.split(",")] if modes else None
        reply = ServiceClient(server).bench(
            schemas.BenchRequest(config=cfg, repetitions=repetitions, modes=mode_list))
    except ConfigError as err:
        _fail_config(err)
    except ValidationError as err:
        _fail_config(ConfigError(format_validation_error(err)))
    click.echo(f"{'kernel':16s} {'mode':9s} {'seconds':>10s} {'gflops':>9s} "
               f"{'intensity':>10s} {'efficiency':>10s}")
    for row in reply.runs:
        click.echo(f"{row.kernel:16s} {row.mode:9s} {row.seconds:10.4f} {row.gflops:9.2f} "
                   f"{row.intensity:10.3f} {row.efficiency:10.4f}")
    for name, path in reply.artifacts.items():
        click.echo(f"wrote {name}: {path}")


@main.command("autotune")
@_common_options
@click.option("--tiles", required=True, help="Comma-separated tile_x1 candidates, e.g. 1,4,16")
@click.option("--repetitions", type=int, default=3, show_default=True)
def autotune_cmd(config_path, mode, tile_x1, threads, deterministic, precision, out_dir,
                 server, print_config, tiles, repetitions):
    """Time tile_x1 candidates and pick the fastest (ties go to the smaller tile)."""
    try:
        cfg = _resolve(config_path, mode, tile_x1, threads, deterministic, precision,
                       out_dir, print_config)
        if cfg is None:
            return
        candidates = [int(x) for x in tiles.split(",") if x.strip()]
        reply = ServiceClient(server).autotune(
            schemas.AutotuneRequest(config=cfg, candidates=candidates, repetitions=repetitions))
    except (ConfigError, ValueError) as err:
        _fail_config(ConfigError(str(err)))
    for row in reply.rows:
        seconds = f"{row.seconds:.4f}s" if row.seconds is not None else "-"
        click.echo(f"tile_x1={row.tile_x1:<4d} {seconds:>10s}  {row.status}")
    click.echo(f"best tile_x1: {reply.best_tile_x1}")
    for name, path in reply.artifacts.items():
        click.echo(f"wrote {name}: {path}")


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8711, show_default=True)
def serve_cmd(host, port):
    """Run the solver service."""
    import uvicorn

    uvicorn.run(fastapi_app, host=host, port=port)


if __name__ == "__main__":
    main()
