from pathlib import Path
from typing import Annotated, Optional

import typer

from .options import (
    at_least_two,
    build_sigma,
    nonnegative,
    parse_margins,
    positive,
    record_provenance,
)
from ..dependencies import ELLIPGEN_NA_TOKEN
from ..internal.ellipgen import SigmaKind
from ..internal.ellipgen.dependencies import get_facade
from ..internal.logging import get_logger
from ..internal.storage import read_generator, write_data


router = typer.Typer()

logger = get_logger(__name__)


@router.command("sample")
def sample_data(
    ctx: typer.Context,
    generator: Annotated[Path, typer.Option("--generator", help="Generator CSV.", exists=True, dir_okay=False)],
    n: Annotated[int, typer.Option("--n", help="Number of rows.", callback=nonnegative)],
    out: Annotated[Path, typer.Option("--out", help="Output data CSV.")],
    dim: Annotated[Optional[int], typer.Option("--dim", help="Dimension d (overrides the sidecar).", callback=at_least_two)] = None,
    b: Annotated[float, typer.Option("--b", help="Marginal density at 0 if the generator is not normalized.", callback=positive)] = 1.0,
    sigma: Annotated[Optional[Path], typer.Option("--sigma", help="Copula correlation matrix CSV.", exists=True, dir_okay=False)] = None,
    sigma_kind: Annotated[SigmaKind, typer.Option("--sigma-kind", help="Structured correlation family.")] = SigmaKind.EXCHANGEABLE,
    rho: Annotated[float, typer.Option("--rho", help="Correlation parameter of the structured family.")] = 0.0,
    margin: Annotated[Optional[list[str]], typer.Option("--margin", help="scipy.stats margin per column, e.g. norm or t:3; - keeps it uniform.")] = None,
    seed: Annotated[int, typer.Option("--seed", help="Random seed.")] = 0,
    na_token: Annotated[str, typer.Option("--na-token", help="Missing-value token.")] = ELLIPGEN_NA_TOKEN,
):
    """Draw a meta-elliptical sample, or a trans-elliptical one with --margin."""
    facade = get_facade()
    g, sidecar = read_generator(generator, dim)
    if sidecar is not None and sidecar.normalized and sidecar.b is not None:
        b = sidecar.b

    correlation = build_sigma(g.dim, sigma, rho, sigma_kind)
    data = facade.sample(facade.normalize(g, b), correlation, n, seed, margins=parse_margins(margin, g.dim))

    write_data(out, data, na_token)
    record_provenance(ctx, out, seed)
