"""
Matrix value types: observations with a missingness mask, their rank
transforms, correlation matrices and the structured correlation matrices
of the simulation study.
"""

from dataclasses import dataclass
from typing import Optional

from typing_extensions import Self

import numpy as np
from scipy.optimize import brentq

from .config import EPS_INV, SigmaKind
from .exceptions import ConfigurationError, DataInvariantError, InfeasibleSigmaError


def _frozen_copy(array, dtype) -> np.ndarray:
    copy = np.array(array, dtype=dtype)
    copy.setflags(write=False)
    return copy


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """
    n x d observations with a missingness mask.

    Missing cells hold NaN in `values` and True in `mask`.

    Attributes:
        values: n x d array of reals.
        mask: n x d booleans, True where the entry is missing.
    """
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self: Self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise DataInvariantError(f"Data must be two-dimensional, got shape {values.shape}")

        mask = np.array(self.mask, dtype=bool)
        if mask.shape != values.shape:
            raise DataInvariantError(f"Mask shape {mask.shape} does not match data {values.shape}")

        values[mask] = np.nan
        if np.any(~np.isfinite(values[~mask])):
            raise DataInvariantError("Observed entries must be finite")

        if values.shape[0] > 0:
            empty_rows = np.flatnonzero(mask.all(axis=1))
            if empty_rows.size:
                raise DataInvariantError(f"Row {int(empty_rows[0]) + 1} is fully missing")

            sparse = np.flatnonzero((~mask).sum(axis=0) < 2)
            if values.shape[0] >= 2 and sparse.size:
                raise DataInvariantError(
                    f"Column {int(sparse[0])} has fewer than two observed entries"
                )

        object.__setattr__(self, "values", _frozen_copy(values, float))
        object.__setattr__(self, "mask", _frozen_copy(mask, bool))

    @classmethod
    def from_array(cls, values, mask: Optional[np.ndarray] = None) -> "DataMatrix":
        """Build from an array; NaN entries count as missing when no mask is given."""
        values = np.asarray(values, dtype=float)
        if mask is None:
            mask = np.isnan(values)
        return cls(values=values, mask=mask)

    @classmethod
    def empty(cls, dim: int) -> "DataMatrix":
        return cls(values=np.empty((0, dim)), mask=np.zeros((0, dim), dtype=bool))

    @property
    def n(self: Self) -> int:
        return self.values.shape[0]

    @property
    def d(self: Self) -> int:
        return self.values.shape[1]

    @property
    def has_missing(self: Self) -> bool:
        return bool(self.mask.any())


@dataclass(frozen=True, eq=False)
class PseudoObs:
    """
    Rank transforms of a DataMatrix, observed entries in (0, 1).

    Attributes:
        values: n x d array, NaN where missing.
        mask: n x d booleans, True where the entry is missing.
    """
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self: Self) -> None:
        values = np.array(self.values, dtype=float)
        mask = np.array(self.mask, dtype=bool)
        if mask.shape != values.shape or values.ndim != 2:
            raise DataInvariantError("Pseudo-observations and mask must be matching 2-D arrays")

        observed = values[~mask]
        if np.any(~(observed > 0) | ~(observed < 1)):
            raise DataInvariantError("Pseudo-observations must lie in (0, 1)")

        values[mask] = np.nan
        object.__setattr__(self, "values", _frozen_copy(values, float))
        object.__setattr__(self, "mask", _frozen_copy(mask, bool))

    @classmethod
    def from_array(cls, values) -> "PseudoObs":
        values = np.asarray(values, dtype=float)
        return cls(values=values, mask=np.isnan(values))

    @property
    def n(self: Self) -> int:
        return self.values.shape[0]

    @property
    def d(self: Self) -> int:
        return self.values.shape[1]

    @property
    def has_missing(self: Self) -> bool:
        return bool(self.mask.any())

    def complete_rows(self: Self) -> np.ndarray:
        """Rows with every entry observed."""
        return self.values[~self.mask.any(axis=1)]


@dataclass(frozen=True, eq=False)
class CorrMatrix:
    """
    Symmetric unit-diagonal positive-definite correlation matrix.

    Attributes:
        values: d x d array.
        eps: Lower bound enforced on the smallest eigenvalue.
    """
    values: np.ndarray
    eps: float = EPS_INV

    def __post_init__(self: Self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ConfigurationError(f"Correlation matrix must be square, got {values.shape}")
        if not np.allclose(values, values.T, atol=1e-12):
            raise ConfigurationError("Correlation matrix must be symmetric")
        if not np.allclose(np.diag(values), 1.0, atol=1e-10):
            raise ConfigurationError("Correlation matrix must have a unit diagonal")
        if np.any(np.abs(values) > 1.0 + 1e-12):
            raise ConfigurationError("Correlation entries must lie in [-1, 1]")

        values = (values + values.T) / 2
        np.fill_diagonal(values, 1.0)
        smallest = float(np.linalg.eigvalsh(values)[0])
        if smallest < self.eps - 1e-10:
            raise ConfigurationError(
                f"Correlation matrix smallest eigenvalue {smallest:.3g} is below {self.eps}"
            )

        object.__setattr__(self, "values", _frozen_copy(values, float))

    @classmethod
    def identity(cls, dim: int) -> "CorrMatrix":
        return cls(np.eye(dim))

    @classmethod
    def exchangeable(cls, dim: int, rho: float) -> "CorrMatrix":
        """Every off-diagonal entry equal to rho."""
        values = np.full((dim, dim), float(rho))
        np.fill_diagonal(values, 1.0)
        return cls(values)

    @property
    def d(self: Self) -> int:
        return self.values.shape[0]

    @property
    def min_eigenvalue(self: Self) -> float:
        return float(np.linalg.eigvalsh(self.values)[0])


# =============================================================================
# Structured correlation matrices
# =============================================================================

# off-diagonal entry outside the rho12 block of the structured matrices
_BACKGROUND_CORRELATION = 0.2

STRUCTURE_DIMENSIONS: dict[SigmaKind, int] = {
    SigmaKind.SIGMA3: 3,
    SigmaKind.SIGMA10: 10,
}


def structured_values(kind: SigmaKind, rho: float, dim: Optional[int] = None) -> np.ndarray:
    """
    Entries of a structured correlation matrix, without validation.

    exchangeable has every off-diagonal entry equal to rho. sigma3 couples
    coordinates 1 and 2 by rho and everything else by 0.2. sigma10 couples
    coordinates 1 to 3 pairwise by rho and everything else by 0.2.
    """
    kind = SigmaKind(kind)
    if kind is SigmaKind.EXCHANGEABLE:
        if dim is None or dim < 2:
            raise ConfigurationError("The exchangeable structure needs a dimension of at least 2")
        values = np.full((dim, dim), float(rho))
    else:
        dim = STRUCTURE_DIMENSIONS[kind]
        block = 2 if kind is SigmaKind.SIGMA3 else 3
        values = np.full((dim, dim), _BACKGROUND_CORRELATION)
        values[:block, :block] = rho

    np.fill_diagonal(values, 1.0)
    return values


def feasibility_bound(kind: SigmaKind, dim: Optional[int] = None) -> float:
    """
    Largest rho at which the structured matrix stops being positive definite.

    The matrix is positive definite exactly for rho above this bound (and below 1).
    """
    kind = SigmaKind(kind)
    if kind is SigmaKind.EXCHANGEABLE:
        return -1.0 / (dim - 1)

    def smallest_eigenvalue(rho: float) -> float:
        return float(np.linalg.eigvalsh(structured_values(kind, rho))[0])

    return float(brentq(smallest_eigenvalue, -1.0, _BACKGROUND_CORRELATION, xtol=1e-12))


def structured_corr(
    kind: SigmaKind,
    rho: float,
    dim: Optional[int] = None,
    eps: float = EPS_INV,
) -> CorrMatrix:
    """
    Structured correlation matrix of the simulation study.

    Raises:
        InfeasibleSigmaError: If rho is at or below the feasibility bound.
    """
    values = structured_values(kind, rho, dim)
    if float(np.linalg.eigvalsh(values)[0]) < eps or not -1.0 < rho < 1.0:
        raise InfeasibleSigmaError(
            f"{SigmaKind(kind).value} with rho12={rho} is not positive definite "
            f"(feasibility bound {feasibility_bound(kind, values.shape[0]):.4f})"
        )
    return CorrMatrix(values, eps=eps)
