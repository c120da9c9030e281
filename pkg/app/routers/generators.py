from pathlib import Path
from typing import Annotated, Optional

import numpy as np
import pandas as pd
import typer

from .options import (
    at_least_two,
    build_grid,
    build_sigma,
    correlation,
    positive,
    record_provenance,
)
from ..internal.ellipgen import DensityKind, SigmaKind
from ..internal.ellipgen.config import TOL_NORM_ESTIMATED
from ..internal.ellipgen.dependencies import get_facade
from ..internal.logging import get_logger
from ..internal.storage import read_generator, write_generator, write_table


router = typer.Typer()

logger = get_logger(__name__)


@router.command("normalize")
def normalize_generator(
    ctx: typer.Context,
    in_path: Annotated[Path, typer.Option("--in", help="Generator CSV (t,value).", exists=True, dir_okay=False)],
    out: Annotated[Path, typer.Option("--out", help="Normalized generator CSV.")],
    b: Annotated[float, typer.Option("--b", help="Marginal density at 0.", callback=positive)] = 1.0,
    dim: Annotated[Optional[int], typer.Option("--dim", help="Dimension d (overrides the sidecar).", callback=at_least_two)] = None,
    t_max: Annotated[Optional[float], typer.Option("--t-max", help="Right end of the output grid.", callback=positive)] = None,
    step: Annotated[Optional[float], typer.Option("--step", help="Step of the output grid.", callback=positive)] = None,
    tol_norm: Annotated[float, typer.Option("--tol-norm", help="Constraint tolerance.", callback=positive)] = TOL_NORM_ESTIMATED,
):
    """Rescale a generator so that both identification constraints hold."""
    g, _ = read_generator(in_path, dim)
    logger.info(f"Normalizing {in_path} (d={g.dim}, {g.grid.count} nodes)")

    normalized = get_facade().normalize(g, b, grid=build_grid(t_max, step), tol_norm=tol_norm)
    write_generator(out, normalized)
    record_provenance(ctx, out)


@router.command("density")
def evaluate_density(
    ctx: typer.Context,
    generator: Annotated[Path, typer.Option("--generator", help="Generator CSV.", exists=True, dir_okay=False)],
    kind: Annotated[DensityKind, typer.Option("--kind", help="Quantity to evaluate.")] = DensityKind.PDF,
    at: Annotated[Optional[list[float]], typer.Option("--at", help="Query point (repeatable).")] = None,
    points: Annotated[Optional[Path], typer.Option("--points", help="CSV of query points, one per row.", exists=True, dir_okay=False)] = None,
    dim: Annotated[Optional[int], typer.Option("--dim", help="Dimension d (overrides the sidecar).", callback=at_least_two)] = None,
    b: Annotated[float, typer.Option("--b", help="Marginal density at 0 if the generator is not normalized.", callback=positive)] = 1.0,
    sigma: Annotated[Optional[Path], typer.Option("--sigma", help="Copula correlation matrix CSV.", exists=True, dir_okay=False)] = None,
    rho: Annotated[float, typer.Option("--rho", help="Exchangeable copula correlation.", callback=correlation)] = 0.0,
    out: Annotated[Optional[Path], typer.Option("--out", help="Output CSV (stdout when absent).")] = None,
):
    """Evaluate the marginal pdf, cdf or quantile function, or the copula density."""
    if (at is None) == (points is None):
        raise typer.BadParameter("pass exactly one of --at and --points")

    facade = get_facade()
    g, sidecar = read_generator(generator, dim)
    if sidecar is not None and sidecar.normalized and sidecar.b is not None:
        b = sidecar.b
    g = facade.normalize(g, b)

    query = np.asarray(at, dtype=float) if at is not None else pd.read_csv(points).to_numpy(dtype=float)
    if kind is DensityKind.COPULA:
        query = np.atleast_2d(query)
        if query.shape[1] != g.dim:
            raise typer.BadParameter(f"copula points need {g.dim} coordinates, got {query.shape[1]}")
        values = facade.evaluate(g, kind, query, build_sigma(g.dim, sigma, rho, SigmaKind.EXCHANGEABLE))
        rows = [{**{f"u{j + 1}": u for j, u in enumerate(point)}, "value": value} for point, value in zip(query, values)]
    else:
        query = query.reshape(-1)
        values = facade.evaluate(g, kind, query)
        rows = [{"x": x, kind.value: value} for x, value in zip(query, values)]

    if out is None:
        typer.echo(pd.DataFrame(rows).to_csv(index=False, float_format="%.17g"), nl=False)
        return

    write_table(out, rows)
    record_provenance(ctx, out)
