"""
Simulation-based parametric fitting of the copula generator.

For each parameter tuple of a family grid, an elliptical sample with the
estimated correlation matrix is simulated and compared with the empirical
copula of the data; the tuple with the smallest discrepancy wins. Every
tuple uses the same seed so the discrepancy landscape is comparable.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

from typing_extensions import Self

import numpy as np

from .config import DiscrepancyConfig, DiscrepancyKind, FamilyId
from .copula import corr_from_tau, kendall_tau_matrix, pseudo_observations
from .elliptical import EllipticalModel, sample_elliptical
from .exceptions import ConfigurationError, InadmissibleThetaError
from .generator import Generator
from .matrices import CorrMatrix, DataMatrix, PseudoObs
from .models import FitRecord
from .tabulated import UniformGrid
from ..logging import get_logger


logger = get_logger(__name__)

PARAMETER_NAMES: dict[FamilyId, tuple[str, str]] = {
    FamilyId.PEARSON7: ("m", "N"),
    FamilyId.KOTZ: ("lam", "beta"),
}

_CHUNK_ROWS = 256


@dataclass(frozen=True)
class ParametricFamily:
    """
    Generator family with a finite parameter grid.

    Attributes:
        family: pearson7, g(t) = (1 + t/m)^-N, or kotz, g(t) = P(t) exp(-lam t^beta).
        grid: Parameter tuples, (m, N) or (lam, beta).
        polynomial: Coefficients of P in increasing degree (kotz only).
    """
    family: FamilyId
    grid: tuple[tuple[float, float], ...]
    polynomial: tuple[float, ...] = field(default=(1.0,))

    def __post_init__(self: Self) -> None:
        object.__setattr__(self, "family", FamilyId(self.family))
        object.__setattr__(self, "grid", tuple(tuple(float(v) for v in theta) for theta in self.grid))
        if not self.grid:
            raise ConfigurationError("Parameter grid must not be empty")
        if any(len(theta) != 2 for theta in self.grid):
            raise ConfigurationError("Every parameter tuple must have two entries")

        nodes = np.linspace(0.0, 1000.0, 2001)
        if np.any(np.polynomial.polynomial.polyval(nodes, self.polynomial) < 0):
            raise ConfigurationError("The Kotz polynomial must be nonnegative")

    @classmethod
    def product(
        cls,
        family: FamilyId,
        first: Sequence[float],
        second: Sequence[float],
        polynomial: Sequence[float] = (1.0,),
    ) -> "ParametricFamily":
        """Grid of every (first, second) combination, first varying slowest."""
        return cls(family=family, grid=tuple(itertools.product(first, second)), polynomial=tuple(polynomial))

    @property
    def names(self: Self) -> tuple[str, str]:
        return PARAMETER_NAMES[self.family]

    def is_admissible(self: Self, theta: Sequence[float], dim: int) -> bool:
        first, second = theta
        if self.family is FamilyId.PEARSON7:
            return first > 0 and second > 1 + dim / 2
        return first > 0 and 0 < second <= 1

    def check_admissible(self: Self, theta: Sequence[float], dim: int) -> None:
        if not self.is_admissible(theta, dim):
            raise InadmissibleThetaError(
                f"{self.family.value} parameters {dict(zip(self.names, theta))} "
                f"are not admissible in dimension {dim}"
            )

    def generator(self: Self, theta: Sequence[float], dim: int, grid: UniformGrid) -> Generator:
        """Tabulated family member (unnormalized; the copula does not depend on scale)."""
        self.check_admissible(theta, dim)
        first, second = theta
        if self.family is FamilyId.PEARSON7:
            return Generator.from_callable(lambda t: (1.0 + t / first) ** (-second), dim, grid)

        coefficients = np.asarray(self.polynomial, dtype=float)
        return Generator.from_callable(
            lambda t: np.polynomial.polynomial.polyval(t, coefficients) * np.exp(-first * t ** second),
            dim,
            grid,
        )


# =============================================================================
# Discrepancies
# =============================================================================

def empirical_copula(u: PseudoObs, points) -> float | np.ndarray:
    """
    C_n(v) = n^-1 sum_i 1(U_i <= v componentwise).

    Args:
        u: Complete pseudo-observations.
        points: One point of [0, 1]^d or an array of points (one per row).
    """
    if u.has_missing:
        raise ConfigurationError("The empirical copula needs complete pseudo-observations")
    return _empirical_cdf(u.values, points)


def _empirical_cdf(sample: np.ndarray, points) -> float | np.ndarray:
    points = np.asarray(points, dtype=float)
    single = points.ndim == 1
    points = np.atleast_2d(points)

    result = np.empty(points.shape[0])
    for start in range(0, points.shape[0], _CHUNK_ROWS):
        block = points[start:start + _CHUNK_ROWS]
        below = np.all(sample[None, :, :] <= block[:, None, :], axis=2)
        result[start:start + _CHUNK_ROWS] = below.mean(axis=1)
    return float(result[0]) if single else result


def _cell_index(values: np.ndarray, cuts: list[np.ndarray], bins: int) -> np.ndarray:
    # interval k of dimension j is (cuts[j][k-1], cuts[j][k]]
    coordinates = [np.searchsorted(cuts[j], values[:, j], side="left") for j in range(values.shape[1])]
    return np.ravel_multi_index(coordinates, (bins,) * values.shape[1])


def discrepancy(
    theta: Sequence[float],
    u: PseudoObs,
    sigma: CorrMatrix,
    cfg: DiscrepancyConfig,
    family: ParametricFamily,
) -> float:
    """
    Distance between the data copula and the copula simulated from g_theta.

    N_sim draws of E_d(0, sigma, g_theta) are mapped through the pooled
    empirical cdf of all their coordinates. emp averages the squared gap
    between the data copula and the simulated joint cdf over the simulated
    points; chi sums the absolute gaps of cell masses over a grid of cells
    cut at per-dimension quantiles of the simulated sample.

    Raises:
        InadmissibleThetaError: If theta is outside the family's admissible set.
    """
    dim = sigma.d
    family.check_admissible(theta, dim)
    data = u.complete_rows()

    g_theta = family.generator(theta, dim, cfg.grid)
    rng = np.random.default_rng(cfg.seed)
    simulated = sample_elliptical(EllipticalModel.centered(sigma, g_theta), cfg.n_sim, rng).values

    pooled = np.sort(simulated.ravel())

    def pooled_cdf(x: np.ndarray) -> np.ndarray:
        return np.searchsorted(pooled, x, side="right") / pooled.size

    if DiscrepancyKind(cfg.kind) is DiscrepancyKind.EMP:
        copula_scale = pooled_cdf(simulated)
        data_cdf = _empirical_cdf(data, copula_scale)
        simulated_cdf = _empirical_cdf(simulated, simulated)
        return float(np.mean((data_cdf - simulated_cdf) ** 2))

    bins = cfg.bins_per_dim
    levels = np.arange(1, bins) / bins
    cuts = [np.quantile(simulated[:, j], levels) for j in range(dim)]
    data_cuts = [pooled_cdf(cut) for cut in cuts]

    cells = bins ** dim
    simulated_mass = np.bincount(_cell_index(simulated, cuts, bins), minlength=cells) / simulated.shape[0]
    data_mass = np.bincount(_cell_index(data, data_cuts, bins), minlength=cells) / data.shape[0]
    return float(np.sum(np.abs(data_mass - simulated_mass)))


def simfit_estimate(
    x: DataMatrix,
    family: ParametricFamily,
    cfg: DiscrepancyConfig,
) -> tuple[tuple[float, float], list[FitRecord]]:
    """
    Grid search of the family parameters minimizing the discrepancy.

    Inadmissible tuples stay in the table with an infinite discrepancy.

    Returns:
        The first tuple (in grid order) attaining the minimum, and one
        FitRecord per grid tuple.
    """
    u = pseudo_observations(x)
    sigma = corr_from_tau(kendall_tau_matrix(u))

    table: list[FitRecord] = []
    for theta in family.grid:
        labels = dict(zip(family.names, theta))
        if not family.is_admissible(theta, x.d):
            logger.warning(f"Skipping inadmissible {family.family.value} parameters {labels}")
            table.append(FitRecord(theta=labels, discrepancy=math.inf, admissible=False))
            continue

        value = discrepancy(theta, u, sigma, cfg, family)
        logger.debug(f"{family.family.value} {labels}: {cfg.kind.value} discrepancy {value:.6g}")
        table.append(FitRecord(theta=labels, discrepancy=value))

    values = np.array([record.discrepancy for record in table])
    if not np.any(np.isfinite(values)):
        raise InadmissibleThetaError("No admissible parameter tuple in the grid")

    best = family.grid[int(np.argmin(values))]
    logger.info(f"Best {family.family.value} parameters: {dict(zip(family.names, best))}")
    return best, table
