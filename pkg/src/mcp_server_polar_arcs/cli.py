"""
Command line for the polar arcs toolkit.

Results go to stdout (or --out) as JSON or CSV; logs go to stderr. Exit
codes: 0 success, 2 usage error, 3 numerical failure with a diagnostic
JSON object on stderr.
"""

import logging
import sys
from dataclasses import dataclass
from typing import Callable, List, Optional

import typer

from .core.config import RunConfig, load_config
from .core.errors import MapSpecError, NumericalError, PolarArcError, UsageError
from .core.format import (
    dumps_json,
    eval_csv,
    events_csv,
    fixed_points_csv,
    matrix_csv,
    plan_csv,
    resolve_output_format,
    scan_csv,
    trace_csv,
)
from .core.tools import (
    eval_payload,
    fixed_points_payload,
    invariant_matrix_payload,
    plan_payload,
    scan_payload,
    trace_payload,
)

# Configure logging
logger = logging.getLogger(__name__)

EXIT_USAGE = 2
EXIT_NUMERICAL = 3

app = typer.Typer(
    name="polar-arcs",
    help="Polar gradient-like torus maps: fixed points, invariant matrices, arc plans and saddle-node scans.",
    no_args_is_help=True,
    add_completion=False,
)


@dataclass
class CliState:
    config_path: Optional[str] = None
    output_format: Optional[str] = None
    out: Optional[str] = None
    grid: Optional[int] = None
    t_grid: Optional[int] = None
    threads: Optional[int] = None

    def config(self) -> RunConfig:
        return load_config(self.config_path, grid_2d=self.grid, t_grid=self.t_grid, threads=self.threads)


def _fail(error: PolarArcError) -> None:
    code = EXIT_USAGE if isinstance(error, UsageError) else EXIT_NUMERICAL
    logger.error(f"{type(error).__name__}: {error.message}")
    typer.echo(dumps_json(error.to_dict()), err=True)
    raise typer.Exit(code)


def _run(ctx: typer.Context, build: Callable[[RunConfig], dict], to_csv: Callable[[dict], str]) -> None:
    state: CliState = ctx.obj
    try:
        config = state.config()
        fmt = resolve_output_format(state.output_format, state.out or config.output_path)
        payload = build(config)
        text = to_csv(payload) if fmt == "csv" else dumps_json(payload) + "\n"
    except PolarArcError as e:
        _fail(e)
        return
    except (ArithmeticError, ValueError, RuntimeError) as e:
        _fail(NumericalError(str(e), {"exception": type(e).__name__}))
        return
    out = state.out or config.output_path
    if out:
        with open(out, "w") as f:
            f.write(text)
        logger.info(f"Wrote {fmt} output to {out}")
    else:
        typer.echo(text, nl=False)


@app.callback()
def main(
    ctx: typer.Context,
    config: Optional[str] = typer.Option(None, "--config", help="Flat key = value config file"),
    output_format: Optional[str] = typer.Option(None, "--format", help="json or csv"),
    out: Optional[str] = typer.Option(None, "--out", help="Write the result to this path"),
    grid: Optional[int] = typer.Option(None, "--grid", help="Newton seeds per axis for 2-D fixed points"),
    t_grid: Optional[int] = typer.Option(None, "--t-grid", help="Number of t intervals for scans"),
    threads: Optional[int] = typer.Option(None, "--threads", help="Worker pool size"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
):
    """Polar arcs command line."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
        force=True,
    )
    ctx.obj = CliState(config, output_format, out, grid, t_grid, threads)


@app.command("fixed-points")
def fixed_points(ctx: typer.Context, map_spec: str = typer.Argument(..., help="f0 | fJ:a,b,c,d | arc:<id>@<t>")):
    """Find and classify the fixed points of a torus map."""
    _run(ctx, lambda config: fixed_points_payload(map_spec, config), lambda p: fixed_points_csv(p["fixed_points"]))


@app.command("invariant-matrix")
def invariant_matrix(ctx: typer.Context, map_spec: str = typer.Argument(..., help="f0 | fJ:a,b,c,d | arc:<id>@<t>")):
    """Measure the invariant matrix from traced separatrices."""
    _run(ctx, lambda config: invariant_matrix_payload(map_spec, config), matrix_csv)


@app.command("plan")
def plan(ctx: typer.Context, entries: str = typer.Argument(..., help="Row-wise entries a,b,c,d")):
    """Plan the chain of elementary arcs from f_J to f_0."""
    _run(ctx, lambda config: plan_payload(entries), plan_csv)


@app.command("scan")
def scan(
    ctx: typer.Context,
    arc_id: str = typer.Argument(..., help="Arc id, e.g. gamma1, h01, h:2 or plan:1,0,1,1"),
    probe: bool = typer.Option(True, "--probe/--no-probe", help="Run the noncriticality probe"),
):
    """Scan an arc for census jumps and localize the saddle-nodes."""

    def to_csv(payload: dict) -> str:
        return scan_csv(payload["rows"]) + "\n" + events_csv(payload["events"])

    _run(ctx, lambda config: scan_payload(arc_id, config, None, probe), to_csv)


@app.command("trace")
def trace(
    ctx: typer.Context,
    map_spec: str = typer.Argument(..., help="f0 | fJ:a,b,c,d | arc:<id>@<t>"),
    saddle: int = typer.Option(1, "--saddle", help="1-based saddle index"),
    stability: str = typer.Option("unstable", "--stability", help="stable or unstable"),
    branch: int = typer.Option(1, "--branch", help="+1 or -1"),
):
    """Trace one separatrix; CSV columns t_step, x_lift, z_lift, x_mod1, z_mod1."""

    def to_csv(payload: dict) -> str:
        meta = {"saddle": payload["saddle"], "stability": stability, "branch": branch, "node": payload["node"]}
        return trace_csv(payload["points"], payload["homotopy_type"], meta)

    _run(ctx, lambda config: trace_payload(map_spec, saddle, stability, branch, config), to_csv)


@app.command("eval")
def evaluate(
    ctx: typer.Context,
    map_spec: str = typer.Argument(..., help="f0 | fJ:a,b,c,d | arc:<id>@<t>"),
    points: List[str] = typer.Argument(..., help="Points as x,z"),
):
    """Evaluate a map at points given as x,z."""

    def build(config: RunConfig) -> dict:
        parsed = []
        for text in points:
            try:
                x, z = (float(v) for v in text.split(","))
            except ValueError as e:
                raise MapSpecError(f"Point {text!r} is not of the form x,z") from e
            parsed.append([x, z])
        return eval_payload(map_spec, parsed, config)

    _run(ctx, build, lambda p: eval_csv(p["points"], p["images"]))


if __name__ == "__main__":
    app()
