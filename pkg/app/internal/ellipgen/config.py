"""
Configuration for the ellipgen estimators.

Provides immutable configuration objects, the closed vocabularies used by
the estimators and the CLI, and per-dimension default settings.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

from typing_extensions import Self

from .exceptions import ConfigurationError
from .tabulated import DEFAULT_GRID, UniformGrid


class InitMethod(str, Enum):
    """Starting point of the fixed-point iteration."""
    GAUSSIAN = "gaussian"
    IDENTITY = "identity"
    INV_PHI = "inv-phi"


class EstimatorKind(str, Enum):
    """Kernel estimator of an elliptical density generator."""
    LIEBSCHER = "liebscher"
    STUTE_WERNER = "stute-werner"


class DiscrepancyKind(str, Enum):
    """Distance between the data copula and a simulated elliptical law."""
    EMP = "emp"
    CHI = "chi"


class FamilyId(str, Enum):
    """Parametric generator families for simulation-based fitting."""
    PEARSON7 = "pearson7"
    KOTZ = "kotz"


class SigmaKind(str, Enum):
    """Correlation structures of the simulation study."""
    EXCHANGEABLE = "exchangeable"
    SIGMA3 = "sigma3"
    SIGMA10 = "sigma10"


class GeneratorId(str, Enum):
    """Test generators of the simulation study."""
    INVERSE_QUADRATIC = "inverse_quadratic"
    EXPONENTIAL = "exponential"
    EXPONENTIAL_BUMP = "exponential_bump"
    EXPONENTIAL_COSINE = "exponential_cosine"
    RATIONAL_HUMP = "rational_hump"
    GAUSSIAN_HUMP = "gaussian_hump"
    GAUSSIAN = "gaussian"


class DensityKind(str, Enum):
    """Quantities the density command can evaluate."""
    PDF = "pdf"
    CDF = "cdf"
    QUANTILE = "quantile"
    COPULA = "copula"


# (a, h) defaults by dimension; other dimensions fall back to FALLBACK_BANDWIDTH
DEFAULT_BANDWIDTHS: dict[int, tuple[float, float]] = {
    2: (1.0, 0.05),
    3: (0.08, 0.2),
}
FALLBACK_BANDWIDTH: tuple[float, float] = (1.0, 0.1)

TOL_NORM_ANALYTIC = 1e-6
TOL_NORM_ESTIMATED = 1e-3
TAIL_MASS_THRESHOLD = 1e-3
EPS_INV = 1e-6


def default_bandwidth(dim: int) -> tuple[float, float]:
    """
    Default (a, h) pair for a dimension.

    Args:
        dim: Data dimension d.

    Returns:
        The instrumental-map constant a and the bandwidth h.
    """
    return DEFAULT_BANDWIDTHS.get(dim, FALLBACK_BANDWIDTH)


@dataclass(frozen=True)
class KernelConfig:
    """
    Settings of the kernel generator estimators.

    Attributes:
        a: Constant of the instrumental map psi_a (Liebscher only).
        h: Kernel bandwidth.
        grid: Output grid of the estimated generator.
    """
    a: float = 1.0
    h: float = 0.1
    grid: UniformGrid = DEFAULT_GRID

    def __post_init__(self: Self) -> None:
        if not self.a > 0:
            raise ConfigurationError(f"a must be positive, got {self.a}")
        if not self.h > 0:
            raise ConfigurationError(f"h must be positive, got {self.h}")


@dataclass(frozen=True)
class MecipConfig:
    """
    Immutable configuration of the iterative generator estimator.

    Attributes:
        b: Target value of the marginal density at 0.
        a: Constant of the instrumental map psi_a.
        h: Kernel bandwidth.
        grid: Grid of every generator iterate.
        init: Initialization method.
        estimator: Kernel estimator used at each step.
        n_max: Iteration cap.
        tol: Convergence threshold on the L2 grid distance between iterates.
        tol_norm: Tolerance of the normalization constraints.
        seed: Seed of the imputation random stream.
    """
    b: float = 1.0
    a: float = 1.0
    h: float = 0.1
    grid: UniformGrid = DEFAULT_GRID
    init: InitMethod = InitMethod.IDENTITY
    estimator: EstimatorKind = EstimatorKind.LIEBSCHER
    n_max: int = 10
    tol: float = 1e-4
    tol_norm: float = TOL_NORM_ESTIMATED
    seed: int = 0

    def __post_init__(self: Self) -> None:
        for name in ("a", "h", "b", "tol", "tol_norm"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.n_max < 1:
            raise ConfigurationError(f"n_max must be at least 1, got {self.n_max}")

        object.__setattr__(self, "init", InitMethod(self.init))
        object.__setattr__(self, "estimator", EstimatorKind(self.estimator))

    @classmethod
    def for_dimension(cls, dim: int, **overrides) -> "MecipConfig":
        """
        Configuration with the per-dimension (a, h) defaults.

        Args:
            dim: Data dimension d.
            **overrides: Any field to set explicitly.
        """
        a, h = default_bandwidth(dim)
        settings = {"a": a, "h": h}
        settings.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**settings)

    @property
    def kernel(self: Self) -> KernelConfig:
        return KernelConfig(a=self.a, h=self.h, grid=self.grid)

    def with_seed(self: Self, seed: int) -> "MecipConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class DiscrepancyConfig:
    """
    Settings of the simulation-based discrepancies.

    Attributes:
        kind: Empirical-measure (emp) or chi-squared type (chi) discrepancy.
        n_sim: Number of simulated elliptical draws per parameter.
        bins_per_dim: Cells per dimension of the chi partition.
        seed: Seed shared by every parameter (common random numbers).
        grid: Grid the family generators are tabulated on.
    """
    kind: DiscrepancyKind = DiscrepancyKind.EMP
    n_sim: int = 10_000
    bins_per_dim: int = 4
    seed: int = 0
    grid: UniformGrid = field(default_factory=lambda: UniformGrid.span(0.0, 400.0, 0.02))

    def __post_init__(self: Self) -> None:
        object.__setattr__(self, "kind", DiscrepancyKind(self.kind))
        if self.n_sim < 100:
            raise ConfigurationError(f"n_sim must be at least 100, got {self.n_sim}")
        # 1 is accepted as the degenerate single-cell partition, whose chi discrepancy is 0
        if self.bins_per_dim < 1:
            raise ConfigurationError(
                f"bins_per_dim must be at least 1, got {self.bins_per_dim}"
            )
