from pathlib import Path
from typing import Annotated, Optional

import typer

from .options import (
    at_least_one,
    build_grid,
    positive,
    record_provenance,
)
from ..dependencies import ELLIPGEN_NA_TOKEN
from ..internal.ellipgen import (
    DiscrepancyConfig,
    DiscrepancyKind,
    EstimatorKind,
    FamilyId,
    InitMethod,
    MecipConfig,
    ParametricFamily,
)
from ..internal.ellipgen.dependencies import get_facade
from ..internal.logging import get_logger
from ..internal.storage import (
    read_data,
    write_generator,
    write_json,
    write_matrix,
    write_table,
)


router = typer.Typer()

logger = get_logger(__name__)


@router.command("estimate")
def estimate_generator(
    ctx: typer.Context,
    in_path: Annotated[Path, typer.Option("--in", help="Data CSV with a header row.", exists=True, dir_okay=False)],
    out: Annotated[Path, typer.Option("--out", help="Estimated generator CSV.")],
    sigma_out: Annotated[Optional[Path], typer.Option("--sigma-out", help="Correlation matrix CSV [default: <out>.sigma.csv].")] = None,
    diagnostics: Annotated[Optional[Path], typer.Option("--diagnostics", help="Diagnostics JSON [default: <out>.diagnostics.json].")] = None,
    initial_out: Annotated[Optional[Path], typer.Option("--initial-out", help="Also write the starting generator.")] = None,
    b: Annotated[float, typer.Option("--b", help="Marginal density at 0.", callback=positive)] = 1.0,
    a: Annotated[Optional[float], typer.Option("--a", help="psi_a constant [default: by dimension].", callback=positive)] = None,
    h: Annotated[Optional[float], typer.Option("--h", help="Kernel bandwidth [default: by dimension].", callback=positive)] = None,
    init: Annotated[InitMethod, typer.Option("--init", help="Initialization.")] = InitMethod.IDENTITY,
    estimator: Annotated[EstimatorKind, typer.Option("--estimator", help="Kernel generator estimator.")] = EstimatorKind.LIEBSCHER,
    n_max: Annotated[int, typer.Option("--n-max", help="Iteration cap.", callback=at_least_one)] = 10,
    tol: Annotated[float, typer.Option("--tol", help="Convergence threshold.", callback=positive)] = 1e-4,
    t_max: Annotated[Optional[float], typer.Option("--t-max", help="Right end of the generator grid.", callback=positive)] = None,
    step: Annotated[Optional[float], typer.Option("--step", help="Step of the generator grid.", callback=positive)] = None,
    seed: Annotated[int, typer.Option("--seed", help="Seed of the imputation draws.")] = 0,
    na_token: Annotated[str, typer.Option("--na-token", help="Missing-value token.")] = ELLIPGEN_NA_TOKEN,
):
    """Estimate the copula generator of a data file with the iterative procedure."""
    data = read_data(in_path, na_token)
    config = MecipConfig.for_dimension(
        data.d,
        b=b,
        a=a,
        h=h,
        grid=build_grid(t_max, step),
        init=init,
        estimator=estimator,
        n_max=n_max,
        tol=tol,
        seed=seed,
    )

    result = get_facade().estimate(data, config)
    if not result.converged:
        logger.warning(f"No convergence after {result.iterations} iteration(s)")

    write_generator(out, result.g_final)
    write_matrix(sigma_out or Path(f"{out}.sigma.csv"), result.sigma)
    write_json(diagnostics or Path(f"{out}.diagnostics.json"), result.diagnostics())
    if initial_out is not None:
        write_generator(initial_out, result.g_initial)

    record_provenance(ctx, out, seed)


@router.command("simfit")
def fit_family(
    ctx: typer.Context,
    in_path: Annotated[Path, typer.Option("--in", help="Data CSV with a header row.", exists=True, dir_okay=False)],
    family: Annotated[FamilyId, typer.Option("--family", help="Generator family.")],
    first: Annotated[list[float], typer.Option("--first", help="Grid of the first parameter, m or lam (repeatable).")],
    second: Annotated[list[float], typer.Option("--second", help="Grid of the second parameter, N or beta (repeatable).")],
    out: Annotated[Path, typer.Option("--out", help="Fit table CSV.")],
    polynomial: Annotated[Optional[list[float]], typer.Option("--poly", help="Kotz polynomial coefficient, constant first (repeatable).")] = None,
    kind: Annotated[DiscrepancyKind, typer.Option("--discrepancy", help="Discrepancy measure.")] = DiscrepancyKind.EMP,
    n_sim: Annotated[int, typer.Option("--n-sim", help="Simulated draws per parameter.", callback=at_least_one)] = 10_000,
    bins: Annotated[int, typer.Option("--bins", help="Cells per dimension of the chi discrepancy.", callback=at_least_one)] = 4,
    seed: Annotated[int, typer.Option("--seed", help="Seed shared by every parameter.")] = 0,
    na_token: Annotated[str, typer.Option("--na-token", help="Missing-value token.")] = ELLIPGEN_NA_TOKEN,
):
    """Fit a parametric generator family by simulation-based grid search."""
    data = read_data(in_path, na_token)
    parametric = ParametricFamily.product(family, first, second, polynomial or (1.0,))
    config = DiscrepancyConfig(kind=kind, n_sim=n_sim, bins_per_dim=bins, seed=seed)

    best, table = get_facade().fit(data, parametric, config)
    write_table(out, [record.to_row() for record in table])
    record_provenance(ctx, out, seed)

    typer.echo(" ".join(f"{name}={value:g}" for name, value in zip(parametric.names, best)))
