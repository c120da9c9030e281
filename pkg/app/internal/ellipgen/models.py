"""
Pydantic models for the records ellipgen writes and reads.

Provides validated models for generator sidecars, estimation diagnostics,
simulation-study records, fit tables, provenance and experiment specs.
"""

from datetime import datetime, timezone
from typing import Any, Optional

from typing_extensions import Self

import numpy as np
from pydantic import BaseModel, Field, computed_field, field_validator, model_validator

from .config import EstimatorKind, GeneratorId, InitMethod, SigmaKind
from .matrices import STRUCTURE_DIMENSIONS, feasibility_bound
from .tabulated import UniformGrid


# =============================================================================
# Generator files
# =============================================================================

class GridSpec(BaseModel):
    """Serialized UniformGrid."""
    start: float
    step: float
    count: int

    @classmethod
    def from_grid(cls, grid: UniformGrid) -> "GridSpec":
        return cls(start=grid.start, step=grid.step, count=grid.count)

    def to_grid(self: Self) -> UniformGrid:
        return UniformGrid(start=self.start, step=self.step, count=self.count)


class GeneratorSidecar(BaseModel):
    """JSON sidecar stored next to a generator CSV."""
    dim: int = Field(ge=1)
    b: Optional[float] = None
    normalized: bool = False
    grid: GridSpec
    tail_mass: float = 0.0


# =============================================================================
# Estimation diagnostics
# =============================================================================

class MecipDiagnostics(BaseModel):
    """Per-run record of the iterative estimator."""
    iterations: int
    distances: list[float]
    clamp_counts: list[int]
    converged: bool
    warnings: list[str] = Field(default_factory=list)
    initial_residuals: tuple[float, float]
    final_residuals: tuple[float, float]
    tol: float

    @computed_field
    @property
    def total_clamped(self: Self) -> int:
        return sum(self.clamp_counts)


# =============================================================================
# Simulation study
# =============================================================================

class MiseRecord(BaseModel):
    """Squared L2 errors of the replications of one parameter tuple."""
    tuple_index: int
    params: dict[str, Any]
    errors: list[float]
    failures: int = 0

    @field_validator("errors")
    @classmethod
    def check_errors(cls, errors: list[float]) -> list[float]:
        if any(not np.isfinite(error) or error < 0 for error in errors):
            raise ValueError("Squared errors must be finite and nonnegative")
        return errors

    @computed_field
    @property
    def mean(self: Self) -> Optional[float]:
        """The MISE."""
        return float(np.mean(self.errors)) if self.errors else None

    @computed_field
    @property
    def median(self: Self) -> Optional[float]:
        return float(np.median(self.errors)) if self.errors else None

    @computed_field
    @property
    def sd(self: Self) -> Optional[float]:
        return float(np.std(self.errors, ddof=1)) if len(self.errors) > 1 else None

    def to_row(self: Self) -> dict[str, Any]:
        return {
            "tuple_index": self.tuple_index,
            **self.params,
            "replications": len(self.errors) + self.failures,
            "failures": self.failures,
            "mean": self.mean,
            "median": self.median,
            "sd": self.sd,
        }


class ReplicationRecord(BaseModel):
    """One replication of one parameter tuple."""
    tuple_index: int
    params: dict[str, Any]
    replication: int
    seed: int
    mise: Optional[float] = None
    mise_initial: Optional[float] = None
    iterations: Optional[int] = None
    converged: Optional[bool] = None
    failed: bool = False
    error: Optional[str] = None
    wall_clock: float = 0.0

    def to_row(self: Self) -> dict[str, Any]:
        return {
            "tuple_index": self.tuple_index,
            **self.params,
            "replication": self.replication,
            "seed": self.seed,
            "mise": self.mise,
            "mise_initial": self.mise_initial,
            "iterations": self.iterations,
            "converged": self.converged,
            "failed": self.failed,
            "wall_clock": round(self.wall_clock, 6),
        }


class ExperimentSpec(BaseModel):
    """
    Sweep definition of the simulation study.

    Every list field is a sweep axis; the experiment runs the product of
    all axes, `replications` times each.
    """
    truth: GeneratorId = GeneratorId.GAUSSIAN
    n: list[int] = Field(default_factory=lambda: [1000])
    d: list[int] = Field(default_factory=lambda: [2])
    sigma_kind: SigmaKind = SigmaKind.EXCHANGEABLE
    rho12: list[float] = Field(default_factory=lambda: [0.2])
    h: list[float] = Field(default_factory=lambda: [0.05])
    a: list[float] = Field(default_factory=lambda: [1.0])
    n_missing: list[int] = Field(default_factory=lambda: [0])
    init: list[InitMethod] = Field(default_factory=lambda: [InitMethod.IDENTITY])
    estimator: EstimatorKind = EstimatorKind.LIEBSCHER
    replications: int = Field(default=20, ge=1)
    master_seed: int = 0
    n_max: int = Field(default=10, ge=1)
    tol: float = Field(default=1e-4, gt=0)
    b: float = Field(default=1.0, gt=0)

    @field_validator("n", "d", "rho12", "h", "a", "n_missing", "init")
    @classmethod
    def check_nonempty(cls, values: list) -> list:
        if not values:
            raise ValueError("Sweep axes must not be empty")
        return values

    @field_validator("h", "a")
    @classmethod
    def check_positive(cls, values: list[float]) -> list[float]:
        if any(value <= 0 for value in values):
            raise ValueError("Bandwidths and psi_a constants must be positive")
        return values

    @field_validator("n")
    @classmethod
    def check_sizes(cls, values: list[int]) -> list[int]:
        if any(value < 2 for value in values):
            raise ValueError("Sample sizes must be at least 2")
        return values

    @model_validator(mode="after")
    def check_structure(self: Self) -> Self:
        if self.sigma_kind is not SigmaKind.EXCHANGEABLE:
            required = STRUCTURE_DIMENSIONS[self.sigma_kind]
            if any(dim != required for dim in self.d):
                raise ValueError(f"{self.sigma_kind.value} needs d = {required}")

        for dim in self.d:
            if dim < 2:
                raise ValueError("Dimensions must be at least 2")
            bound = feasibility_bound(self.sigma_kind, dim)
            infeasible = [rho for rho in self.rho12 if not bound < rho < 1.0]
            if infeasible:
                raise ValueError(
                    f"rho12 values {infeasible} are not above the feasibility bound "
                    f"{bound:.4f} of {self.sigma_kind.value} at d={dim}"
                )

        if any(missing > 0 for missing in self.n_missing) and any(dim != 3 for dim in self.d):
            raise ValueError("Missing-data injection follows the d = 3 protocol")
        return self


# =============================================================================
# Simulation-based fitting
# =============================================================================

class FitRecord(BaseModel):
    """One parameter tuple of a grid-search fit."""
    theta: dict[str, float]
    discrepancy: float
    admissible: bool = True

    def to_row(self: Self) -> dict[str, Any]:
        return {**self.theta, "discrepancy": self.discrepancy, "admissible": self.admissible}


# =============================================================================
# Provenance
# =============================================================================

class Provenance(BaseModel):
    """Record written next to every command output."""
    command: str
    options: dict[str, Any]
    seed: Optional[int] = None
    defaults_version: str
    package_version: str
    created_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
