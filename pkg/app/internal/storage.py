"""
CSV and JSON persistence for the command-line surface.

Data, generators, matrices and tables travel as CSV; sidecars,
diagnostics and provenance as JSON written from pydantic models.
"""

from pathlib import Path
from typing import Any, Iterable, Optional, TextIO

from typing_extensions import Self

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from .ellipgen.exceptions import ConfigurationError, DataInvariantError, DataParseError
from .ellipgen.generator import Generator, NormalizedGenerator, tail_fraction
from .ellipgen.matrices import CorrMatrix, DataMatrix
from .ellipgen.models import GeneratorSidecar, GridSpec, Provenance
from .ellipgen.tabulated import TabulatedFunction, UniformGrid
from .logging import get_logger


logger = get_logger(__name__)

FLOAT_FORMAT = "%.17g"
GENERATOR_COLUMNS = ("t", "value")


def column_names(dim: int) -> list[str]:
    return [f"x{j + 1}" for j in range(dim)]


# =============================================================================
# Data
# =============================================================================

def read_data(path: Path | str, na_token: str = "NA") -> DataMatrix:
    """
    Read a rectangular CSV with a header row into a DataMatrix.

    Args:
        path: CSV file.
        na_token: Cell content marking a missing entry.

    Raises:
        DataParseError: If the file is empty or a cell is neither numeric nor na_token.
        DataInvariantError: If the parsed matrix violates the DataMatrix invariants.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DataParseError(f"{path} is empty")
    except pd.errors.ParserError as e:
        raise DataParseError(f"{path} is not a rectangular CSV: {e}")

    if frame.shape[1] == 0:
        raise DataParseError(f"{path} has no columns")
    if frame.shape[0] == 0:
        raise DataParseError(f"{path} has a header but no data rows")

    frame = frame.apply(lambda column: column.str.strip())
    missing = (frame == na_token).to_numpy()
    numeric = frame.apply(pd.to_numeric, errors="coerce")

    bad = numeric.isna().to_numpy() & ~missing
    if bad.any():
        row, col = map(int, np.argwhere(bad)[0])
        column = str(frame.columns[col])
        raise DataParseError(
            f"Non-numeric cell {frame.iat[row, col]!r} at row {row + 1}, column {column!r}",
            row=row + 1,
            column=column,
        )

    values = numeric.to_numpy(dtype=float)
    if not np.all(np.isfinite(values[~missing])):
        raise DataParseError(f"{path} contains non-finite values")

    try:
        data = DataMatrix.from_array(values, mask=missing)
    except DataInvariantError as e:
        raise DataInvariantError(f"{path}: {e.message}")

    logger.info(f"Read {data.n} x {data.d} data from {path} ({int(missing.sum())} missing)")
    return data


def write_data(path: Path | str, data: DataMatrix, na_token: str = "NA") -> None:
    """Write a DataMatrix with columns x1..xd; an empty sample gives a header-only file."""
    values = np.where(data.mask, np.nan, data.values)
    frame = pd.DataFrame(values, columns=column_names(data.d))
    frame.to_csv(path, index=False, na_rep=na_token, float_format=FLOAT_FORMAT)
    logger.debug(f"Wrote {data.n} row(s) to {path}")


# =============================================================================
# Generators
# =============================================================================

def sidecar_path(path: Path | str) -> Path:
    return Path(f"{path}.json")


def write_generator(path: Path | str, g: Generator | NormalizedGenerator) -> GeneratorSidecar:
    """
    Write a generator as t,value CSV plus its JSON sidecar.

    Values carry 17 significant digits, so a read gives back the same nodes.
    """
    base = g.base if isinstance(g, NormalizedGenerator) else g
    frame = pd.DataFrame({"t": base.grid.nodes, "value": base.values})
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)

    sidecar = GeneratorSidecar(
        dim=base.dim,
        b=g.b if isinstance(g, NormalizedGenerator) else None,
        normalized=isinstance(g, NormalizedGenerator),
        grid=GridSpec.from_grid(base.grid),
        tail_mass=tail_fraction(base),
    )
    sidecar_path(path).write_text(sidecar.model_dump_json(indent=2), encoding="utf-8")

    logger.debug(f"Wrote generator on {base.grid.count} nodes to {path}")
    return sidecar


def read_generator(
    path: Path | str,
    dim: Optional[int] = None,
) -> tuple[Generator, Optional[GeneratorSidecar]]:
    """
    Read a generator CSV and, when present, its sidecar.

    Args:
        path: t,value CSV.
        dim: Dimension d; overrides the sidecar.

    Returns:
        The generator and the sidecar (None if absent).

    Raises:
        DataParseError: If the file is malformed or its t column is not a uniform grid.
        ConfigurationError: If no dimension is known.
    """
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except pd.errors.EmptyDataError:
        raise DataParseError(f"{path} is empty")

    if tuple(frame.columns) != GENERATOR_COLUMNS:
        raise DataParseError(f"{path} must have columns t,value, got {list(frame.columns)}")
    try:
        t = frame["t"].to_numpy(dtype=float)
        values = frame["value"].to_numpy(dtype=float)
    except ValueError as e:
        raise DataParseError(f"{path} has non-numeric cells: {e}")

    sidecar = None
    if sidecar_path(path).exists():
        try:
            sidecar = GeneratorSidecar.model_validate_json(sidecar_path(path).read_text(encoding="utf-8"))
        except ValidationError as e:
            raise DataParseError(f"Invalid sidecar for {path}: {e}")

    if sidecar is not None and sidecar.grid.count == t.size:
        grid = sidecar.grid.to_grid()
    else:
        grid = _infer_grid(t, path)

    dim = dim if dim is not None else (sidecar.dim if sidecar else None)
    if dim is None:
        raise ConfigurationError(f"No dimension for {path}: pass one or provide a sidecar")

    return Generator(dim=dim, table=TabulatedFunction(grid=grid, values=values)), sidecar


def _infer_grid(t: np.ndarray, path) -> UniformGrid:
    if t.size < 2:
        raise DataParseError(f"{path} needs at least two grid nodes")
    grid = UniformGrid.linspace(t[0], t[-1], t.size)
    if not np.allclose(t, grid.nodes, rtol=0.0, atol=1e-9 * max(1.0, abs(t[-1]))):
        raise DataParseError(f"The t column of {path} is not a uniform grid")
    return grid


# =============================================================================
# Matrices, tables and records
# =============================================================================

def write_matrix(path: Path | str, sigma: CorrMatrix) -> None:
    pd.DataFrame(sigma.values, columns=column_names(sigma.d)).to_csv(
        path, index=False, float_format=FLOAT_FORMAT
    )


def read_matrix(path: Path | str) -> CorrMatrix:
    """Read a correlation matrix written by write_matrix."""
    try:
        values = pd.read_csv(path, float_precision="round_trip").to_numpy(dtype=float)
    except (pd.errors.EmptyDataError, ValueError) as e:
        raise DataParseError(f"Cannot read a matrix from {path}: {e}")
    return CorrMatrix(values)


def write_table(path: Path | str, rows: Iterable[dict[str, Any]]) -> None:
    pd.DataFrame(list(rows)).to_csv(path, index=False, float_format=FLOAT_FORMAT)


def write_json(path: Path | str, record: BaseModel) -> None:
    Path(path).write_text(record.model_dump_json(indent=2), encoding="utf-8")


def write_provenance(output: Path | str, provenance: Provenance) -> Path:
    """Write <output>.provenance.json and return its path."""
    target = Path(f"{output}.provenance.json")
    write_json(target, provenance)
    logger.debug(f"Wrote provenance to {target}")
    return target


class RowWriter:
    """
    Streams rows to a CSV file, flushing after each one.

    Example:
        with RowWriter(path) as writer:
            writer.write({"tuple_index": 0, "mise": 0.01})
    """

    def __init__(self: Self, path: Path | str):
        self.path = Path(path)
        self._handle: Optional[TextIO] = None
        self._columns: Optional[list[str]] = None
        self.rows = 0

    def __enter__(self: Self) -> Self:
        self._handle = self.path.open("w", encoding="utf-8", newline="")
        return self

    def __exit__(self: Self, *exc_info) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def write(self: Self, row: dict[str, Any]) -> None:
        if self._handle is None:
            raise RuntimeError("RowWriter is not open")
        if self._columns is None:
            self._columns = list(row)

        frame = pd.DataFrame([row], columns=self._columns)
        frame.to_csv(self._handle, index=False, header=self.rows == 0, float_format=FLOAT_FORMAT)
        self._handle.flush()
        self.rows += 1
