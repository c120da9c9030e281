import json
from pathlib import Path
from typing import Annotated, Any, Optional

import typer
import yaml
from pydantic import ValidationError

from .options import (
    at_least_one,
    at_least_two,
    correlation,
    nonnegative,
    positive,
    record_provenance,
)
from ..internal.ellipgen import (
    EstimatorKind,
    ExperimentSpec,
    GeneratorId,
    InitMethod,
    SigmaKind,
)
from ..internal.ellipgen.dependencies import get_experiment_facade
from ..internal.logging import get_logger
from ..internal.storage import RowWriter, write_table


router = typer.Typer()

logger = get_logger(__name__)


def load_spec(path: Path) -> dict[str, Any]:
    """Experiment definition from a YAML or JSON file."""
    text = path.read_text(encoding="utf-8")
    try:
        loaded = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise typer.BadParameter(f"cannot parse {path}: {e}")
    if not isinstance(loaded, dict):
        raise typer.BadParameter(f"{path} must hold a mapping of experiment settings")
    return loaded


@router.command("experiment")
def run_experiment(
    ctx: typer.Context,
    out: Annotated[Path, typer.Option("--out", help="Per-replication results CSV, written as records arrive.")],
    spec: Annotated[Optional[Path], typer.Option("--spec", help="YAML or JSON experiment definition.", exists=True, dir_okay=False)] = None,
    summary: Annotated[Optional[Path], typer.Option("--summary", help="Per-tuple MISE CSV [default: <out>.summary.csv].")] = None,
    truth: Annotated[Optional[GeneratorId], typer.Option("--truth", help="True generator.")] = None,
    n: Annotated[Optional[list[int]], typer.Option("--n", help="Sample size (repeatable).", callback=at_least_two)] = None,
    d: Annotated[Optional[list[int]], typer.Option("--d", help="Dimension (repeatable).", callback=at_least_two)] = None,
    sigma_kind: Annotated[Optional[SigmaKind], typer.Option("--sigma-kind", help="Correlation structure.")] = None,
    rho12: Annotated[Optional[list[float]], typer.Option("--rho12", help="Correlation parameter (repeatable).", callback=correlation)] = None,
    h: Annotated[Optional[list[float]], typer.Option("--h", help="Kernel bandwidth (repeatable).", callback=positive)] = None,
    a: Annotated[Optional[list[float]], typer.Option("--a", help="psi_a constant (repeatable).", callback=positive)] = None,
    n_missing: Annotated[Optional[list[int]], typer.Option("--n-missing", help="Rows with missing entries (repeatable).", callback=nonnegative)] = None,
    init: Annotated[Optional[list[InitMethod]], typer.Option("--init", help="Initialization (repeatable).")] = None,
    estimator: Annotated[Optional[EstimatorKind], typer.Option("--estimator", help="Kernel generator estimator.")] = None,
    replications: Annotated[Optional[int], typer.Option("--replications", help="Replications per tuple.", callback=at_least_one)] = None,
    seed: Annotated[Optional[int], typer.Option("--seed", help="Master seed.")] = None,
    n_max: Annotated[Optional[int], typer.Option("--n-max", help="Iteration cap.", callback=at_least_one)] = None,
    tol: Annotated[Optional[float], typer.Option("--tol", help="Convergence threshold.", callback=positive)] = None,
    b: Annotated[Optional[float], typer.Option("--b", help="Marginal density at 0.", callback=positive)] = None,
    workers: Annotated[Optional[int], typer.Option("--workers", help="Worker processes, capped by ELLIPGEN_THREADS.", callback=at_least_one)] = None,
):
    """Run a seeded simulation study; flags override the --spec file."""
    settings = load_spec(spec) if spec is not None else {}
    overrides = {
        "truth": truth,
        "n": n,
        "d": d,
        "sigma_kind": sigma_kind,
        "rho12": rho12,
        "h": h,
        "a": a,
        "n_missing": n_missing,
        "init": init,
        "estimator": estimator,
        "replications": replications,
        "master_seed": seed,
        "n_max": n_max,
        "tol": tol,
        "b": b,
    }
    settings.update({key: value for key, value in overrides.items() if value is not None})

    try:
        experiment = ExperimentSpec.model_validate(settings)
    except ValidationError as e:
        raise typer.BadParameter(str(e))

    with RowWriter(out) as writer:
        records = get_experiment_facade(workers).run_experiment(
            experiment, on_record=lambda record: writer.write(record.to_row())
        )

    write_table(summary or Path(f"{out}.summary.csv"), [record.to_row() for record in records])
    record_provenance(ctx, out, experiment.master_seed, {"experiment": experiment.model_dump(mode="json")})

    logger.info(f"Wrote {writer.rows} replication record(s) to {out}")
