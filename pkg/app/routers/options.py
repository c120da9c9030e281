"""
Shared option validators and helpers of the command handlers.
"""

from pathlib import Path
from typing import Any, Optional, Sequence

import typer
from pydantic import BaseModel, Field, field_validator
from scipy import stats

from ..dependencies import DEFAULTS_VERSION, PACKAGE_VERSION
from ..internal.ellipgen import (
    DEFAULT_GRID,
    CorrMatrix,
    SigmaKind,
    UniformGrid,
    structured_corr,
)
from ..internal.ellipgen.models import Provenance
from ..internal.logging import get_logger
from ..internal.storage import read_matrix, write_provenance


logger = get_logger(__name__)

# option keys lifted out of CliConfig.params
PATH_OPTIONS = {"in_path": "input", "out": "output", "generator": "generator"}


# =============================================================================
# Callbacks
# =============================================================================

def _values(value) -> list:
    if value is None:
        return []
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


def positive(value):
    for item in _values(value):
        if not item > 0:
            raise typer.BadParameter(f"must be positive, got {item}")
    return value


def nonnegative(value):
    for item in _values(value):
        if item < 0:
            raise typer.BadParameter(f"must be nonnegative, got {item}")
    return value


def at_least_one(value):
    for item in _values(value):
        if item < 1:
            raise typer.BadParameter(f"must be at least 1, got {item}")
    return value


def at_least_two(value):
    for item in _values(value):
        if item < 2:
            raise typer.BadParameter(f"must be at least 2, got {item}")
    return value


def correlation(value):
    for item in _values(value):
        if not -1.0 < item < 1.0:
            raise typer.BadParameter(f"must lie in (-1, 1), got {item}")
    return value


# =============================================================================
# Parsed configuration
# =============================================================================

class CliConfig(BaseModel):
    """Parsed command line, before any command runs."""
    subcommand: str
    input: Optional[Path] = None
    output: Optional[Path] = None
    generator: Optional[Path] = None
    seed: Optional[int] = None
    na_token: str = "NA"
    params: dict[str, Any] = Field(default_factory=dict)

    @field_validator("input", "output", "generator")
    @classmethod
    def check_path(cls, path: Optional[Path]) -> Optional[Path]:
        if path is not None and not str(path).strip():
            raise ValueError("Paths must not be empty")
        return path

    @classmethod
    def from_params(cls, subcommand: str, params: dict[str, Any]) -> "CliConfig":
        fields: dict[str, Any] = {"subcommand": subcommand}
        rest = {}
        for key, value in params.items():
            if key in PATH_OPTIONS:
                fields[PATH_OPTIONS[key]] = value
            elif key in ("seed", "na_token"):
                fields[key] = value
            else:
                rest[key] = value

        if fields.get("na_token") is None:
            fields.pop("na_token", None)
        return cls(**fields, params=rest)


# =============================================================================
# Builders
# =============================================================================

def build_grid(t_max: Optional[float], step: Optional[float]) -> Optional[UniformGrid]:
    """Output grid [0, t_max] with the given step; None keeps the caller's default."""
    if t_max is None and step is None:
        return None
    return UniformGrid.span(0.0, t_max if t_max is not None else DEFAULT_GRID.stop, step or DEFAULT_GRID.step)


def build_sigma(
    dim: int,
    sigma_path: Optional[Path] = None,
    rho: float = 0.0,
    kind: SigmaKind = SigmaKind.EXCHANGEABLE,
) -> CorrMatrix:
    """Correlation matrix from a CSV file, or a structured one of dimension dim."""
    if sigma_path is not None:
        sigma = read_matrix(sigma_path)
        if sigma.d != dim:
            raise typer.BadParameter(f"matrix in {sigma_path} is {sigma.d} x {sigma.d}, expected d = {dim}")
        return sigma
    return structured_corr(kind, rho, dim)


def parse_margins(specs: Optional[Sequence[str]], dim: int) -> Optional[list]:
    """
    Frozen scipy.stats laws from `name` or `name:arg,arg` specs.

    A `-` keeps the uniform margin of its column.
    """
    if not specs:
        return None
    if len(specs) != dim:
        raise typer.BadParameter(f"expected {dim} margins, got {len(specs)}")

    margins = []
    for spec in specs:
        if spec == "-":
            margins.append(None)
            continue

        name, _, raw = spec.partition(":")
        law = getattr(stats, name, None)
        if not isinstance(law, stats.rv_continuous):
            raise typer.BadParameter(f"unknown continuous distribution {name!r}")
        try:
            args = [float(arg) for arg in raw.split(",")] if raw else []
            margins.append(law(*args))
        except (TypeError, ValueError) as e:
            raise typer.BadParameter(f"invalid arguments for {name!r}: {e}")

    return margins


def record_provenance(
    ctx: typer.Context,
    output: Path,
    seed: Optional[int] = None,
    options: Optional[dict[str, Any]] = None,
) -> None:
    """Write <output>.provenance.json for the running command."""
    provenance = Provenance(
        command=ctx.info_name or "",
        options={**ctx.params, **(options or {})},
        seed=seed,
        defaults_version=DEFAULTS_VERSION,
        package_version=PACKAGE_VERSION,
    )
    write_provenance(output, provenance)
