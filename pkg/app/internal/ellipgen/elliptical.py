"""
Elliptical laws: polar-decomposition sampling, kernel estimators of the
density generator and conditional elliptical models.
"""

import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Union

from typing_extensions import Self

import numpy as np
import scipy.linalg
from scipy.integrate import cumulative_trapezoid
from scipy.stats import gaussian_kde, norm

from .config import EPS_INV, EstimatorKind, KernelConfig
from .exceptions import (
    BoundaryWarning,
    ConfigurationError,
    FactorizationError,
    OutOfDomainError,
    SingularBlockError,
    SingularSigmaError,
    ZeroGeneratorError,
)
from .generator import Generator, radial_moment, surface_area
from .matrices import CorrMatrix, DataMatrix
from .tabulated import TabulatedFunction, UniformGrid
from ..logging import get_logger


logger = get_logger(__name__)

MatrixLike = Union[CorrMatrix, np.ndarray]


def _as_array(sigma: MatrixLike) -> np.ndarray:
    return sigma.values if isinstance(sigma, CorrMatrix) else np.asarray(sigma, dtype=float)


# =============================================================================
# Models
# =============================================================================

@dataclass(frozen=True, eq=False)
class EllipticalModel:
    """
    Elliptical law E_d(mu, sigma, gen).

    Attributes:
        mu: Location vector of length d.
        sigma: d x d dispersion matrix (a correlation matrix for copula work).
        gen: Generator of dimension d.
    """
    mu: np.ndarray
    sigma: np.ndarray
    gen: Generator

    def __post_init__(self: Self) -> None:
        sigma = np.array(_as_array(self.sigma), dtype=float)
        mu = np.array(self.mu, dtype=float).reshape(-1)
        if sigma.shape != (mu.size, mu.size):
            raise ConfigurationError(
                f"Dispersion shape {sigma.shape} does not match location length {mu.size}"
            )
        if self.gen.dim != mu.size:
            raise ConfigurationError(
                f"Generator dimension {self.gen.dim} does not match model dimension {mu.size}"
            )
        if not np.allclose(sigma, sigma.T, atol=1e-10):
            raise ConfigurationError("Dispersion matrix must be symmetric")

        sigma.setflags(write=False)
        mu.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "mu", mu)

    @classmethod
    def centered(cls, sigma: MatrixLike, gen: Generator) -> "EllipticalModel":
        sigma = _as_array(sigma)
        return cls(mu=np.zeros(sigma.shape[0]), sigma=sigma, gen=gen)

    @property
    def d(self: Self) -> int:
        return self.mu.size

    @cached_property
    def factor(self: Self) -> np.ndarray:
        """
        Lower Cholesky factor L with L L^T = sigma.

        Raises:
            FactorizationError: If the smallest eigenvalue is below EPS_INV.
        """
        smallest = float(np.linalg.eigvalsh(self.sigma)[0])
        if smallest < EPS_INV:
            raise FactorizationError(
                f"Dispersion matrix is not positive definite (smallest eigenvalue {smallest:.3g})"
            )
        return scipy.linalg.cholesky(self.sigma, lower=True)


@dataclass(frozen=True, eq=False)
class ModularLaw:
    """
    Law of the modular variable R of the polar decomposition.

    Attributes:
        density: g_R(r) = s_d r^(d-1) g(r^2) on [0, sqrt(T_max)].
        cdf: Cumulative trapezoid of g_R, scaled to end at 1.
        mass: Trapezoid integral of g_R before scaling.
    """
    density: TabulatedFunction
    cdf: TabulatedFunction
    mass: float

    def cumulative(self: Self, r):
        return self.cdf(r, above=1.0)

    def cumulative_squared(self: Self, t):
        """cdf of R^2 at t."""
        return self.cumulative(np.sqrt(np.maximum(t, 0.0)))

    def quantile(self: Self, u):
        """Monotone linear inversion of the cdf."""
        return np.interp(u, self._increasing_cdf, self._increasing_nodes)

    def sample(self: Self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.quantile(rng.random(n))

    @cached_property
    def _increasing(self: Self) -> tuple[np.ndarray, np.ndarray]:
        values = self.cdf.values
        keep = np.concatenate(([0], np.flatnonzero(np.diff(values) > 0) + 1))
        return values[keep], self.cdf.grid.nodes[keep]

    @property
    def _increasing_cdf(self: Self) -> np.ndarray:
        return self._increasing[0]

    @property
    def _increasing_nodes(self: Self) -> np.ndarray:
        return self._increasing[1]


def modular_law(g: Generator) -> ModularLaw:
    """
    Modular density g_R of the generator and its sampling tables.

    Raises:
        ZeroGeneratorError: If g_R carries no mass.
    """
    r_grid = UniformGrid.linspace(0.0, np.sqrt(g.t_max), g.grid.count)
    r = r_grid.nodes
    values = surface_area(g.dim) * r ** (g.dim - 1) * g(r * r)
    cumulative = cumulative_trapezoid(values, dx=r_grid.step, initial=0.0)
    mass = float(cumulative[-1])
    if not mass > 0:
        raise ZeroGeneratorError("Modular density integrates to zero")

    return ModularLaw(
        density=TabulatedFunction(r_grid, values),
        cdf=TabulatedFunction(r_grid, np.clip(cumulative / mass, 0.0, 1.0)),
        mass=mass,
    )


def sample_elliptical(model: EllipticalModel, n: int, rng: np.random.Generator) -> DataMatrix:
    """
    Draw n rows mu + R L V with L the Cholesky factor and V uniform on the sphere.

    Args:
        model: Elliptical law.
        n: Number of draws (n = 0 gives an empty matrix).
        rng: Random stream; the draws are a deterministic function of its state.

    Raises:
        FactorizationError: If the dispersion matrix is not positive definite.
    """
    if n < 0:
        raise ConfigurationError(f"n must be nonnegative, got {n}")

    factor = model.factor
    if n == 0:
        return DataMatrix.empty(model.d)

    directions = rng.standard_normal((n, model.d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = modular_law(model.gen).sample(n, rng)

    values = model.mu + radii[:, None] * (directions @ factor.T)
    return DataMatrix.from_array(values)


def conditional_model(
    model: EllipticalModel,
    observed_idx,
    observed_vals,
) -> EllipticalModel:
    """
    Conditional law of the unobserved coordinates given the observed ones.

    Args:
        model: Joint elliptical law.
        observed_idx: Indices of the conditioning coordinates (proper, nonempty).
        observed_vals: Values of those coordinates.

    Returns:
        EllipticalModel of dimension d - |observed_idx| with the conditional
        mean, the Schur-complement dispersion and the generator g(t + q)
        renormalized at the new dimension.

    Raises:
        SingularBlockError: If the observed block is not invertible.
    """
    observed = np.asarray(observed_idx, dtype=int).reshape(-1)
    values = np.asarray(observed_vals, dtype=float).reshape(-1)
    if observed.size == 0 or observed.size >= model.d or np.unique(observed).size != observed.size:
        raise OutOfDomainError("Conditioning set must be a proper nonempty index subset")
    if values.size != observed.size:
        raise ConfigurationError("One observed value is needed per conditioning index")

    missing = np.setdiff1d(np.arange(model.d), observed)
    sigma = model.sigma
    block = sigma[np.ix_(observed, observed)]
    cross = sigma[np.ix_(missing, observed)]

    try:
        factor = scipy.linalg.cho_factor(block, lower=True)
    except np.linalg.LinAlgError as e:
        raise SingularBlockError(f"Observed block is not invertible: {e}") from e

    offset = values - model.mu[observed]
    weights = scipy.linalg.cho_solve(factor, offset)
    q = float(offset @ weights)

    mu_c = model.mu[missing] + cross @ weights
    sigma_c = sigma[np.ix_(missing, missing)] - cross @ scipy.linalg.cho_solve(factor, cross.T)
    sigma_c = (sigma_c + sigma_c.T) / 2

    shifted = Generator(
        dim=missing.size,
        table=TabulatedFunction(model.gen.grid, model.gen(model.gen.grid.nodes + q)),
    )
    mass = surface_area(missing.size) * radial_moment(shifted, missing.size - 1) / 2
    gen_c = Generator(dim=missing.size, table=TabulatedFunction(shifted.grid, shifted.values / mass))

    logger.debug(f"Conditional model on {missing.tolist()} given {observed.tolist()}: q={q:.6g}")
    return EllipticalModel(mu=mu_c, sigma=sigma_c, gen=gen_c)


# =============================================================================
# Kernel estimators
# =============================================================================

def psi_a(x, a: float, dim: int):
    """Instrumental map psi_a(x) = -a + (a^(d/2) + x^(d/2))^(2/d); the identity for d = 2."""
    x = np.asarray(x, dtype=float)
    if dim == 2:
        return x.copy()
    # a ((1 + (x/a)^(d/2))^(2/d) - 1), exact zero at x = 0
    return a * np.expm1(2 / dim * np.log1p((x / a) ** (dim / 2)))


def psi_a_prime(x, a: float, dim: int):
    """Derivative of psi_a."""
    x = np.asarray(x, dtype=float)
    return (a ** (dim / 2) + x ** (dim / 2)) ** (2 / dim - 1) * x ** (dim / 2 - 1)


def _liebscher_prefactor(t: np.ndarray, a: float, dim: int) -> np.ndarray:
    # psi_a'(t) t^(1 - d/2), finite at t = 0
    return (a ** (dim / 2) + t ** (dim / 2)) ** (2 / dim - 1)


def _squared_radii(z: np.ndarray, sigma: MatrixLike) -> np.ndarray:
    sigma = _as_array(sigma)
    if sigma.shape != (z.shape[1], z.shape[1]):
        raise ConfigurationError(f"Sigma shape {sigma.shape} does not match data width {z.shape[1]}")
    if float(np.linalg.eigvalsh(sigma)[0]) < EPS_INV:
        raise SingularSigmaError("Correlation matrix is not invertible")

    factor = scipy.linalg.cho_factor(sigma, lower=True)
    return np.einsum("ij,ij->i", z, scipy.linalg.cho_solve(factor, z.T).T)


def _kernel_density(samples: np.ndarray, points: np.ndarray, h: float) -> np.ndarray:
    """(n h)^-1 sum of Gaussian kernels K((x - sample) / h)."""
    spread = float(np.std(samples, ddof=1))
    if spread > 0:
        return gaussian_kde(samples, bw_method=h / spread)(points)
    return norm.pdf((points - samples[0]) / h) / h


def _complete_array(z: Union[DataMatrix, np.ndarray]) -> np.ndarray:
    if isinstance(z, DataMatrix):
        if z.has_missing:
            raise ConfigurationError("Kernel estimators need complete data")
        z = z.values
    z = np.asarray(z, dtype=float)
    if z.ndim != 2 or z.shape[0] < 2:
        raise ConfigurationError("Kernel estimators need at least two rows")
    if z.shape[1] < 2:
        raise OutOfDomainError(f"Kernel estimators need d >= 2, got {z.shape[1]}")
    return z


class GeneratorEstimator(ABC):
    """
    Kernel estimator of the generator of an elliptical sample.

    Subclasses implement estimate(); MECIP calls it once per iteration.
    """

    kind: EstimatorKind

    def __init__(self: Self, config: KernelConfig):
        self.config = config
        self.logger = get_logger(self.__class__.__name__)

    @abstractmethod
    def estimate(self: Self, z: Union[DataMatrix, np.ndarray], sigma: MatrixLike) -> Generator:
        """
        Estimate the generator from centered observations.

        Args:
            z: n x d complete observations.
            sigma: Correlation matrix of the elliptical law.

        Returns:
            Nonnegative generator on the configured grid.
        """


class LiebscherEstimator(GeneratorEstimator):
    """Reflected kernel estimate of the law of psi_a(Z^T Sigma^-1 Z), mapped back to g."""

    kind = EstimatorKind.LIEBSCHER

    def estimate(self: Self, z: Union[DataMatrix, np.ndarray], sigma: MatrixLike) -> Generator:
        z = _complete_array(z)
        dim = z.shape[1]
        a, h, grid = self.config.a, self.config.h, self.config.grid

        transformed = psi_a(_squared_radii(z, sigma), a, dim)
        t = grid.nodes
        mapped = psi_a(t, a, dim)
        density = _kernel_density(transformed, mapped, h) + _kernel_density(transformed, -mapped, h)

        values = 2.0 / surface_area(dim) * _liebscher_prefactor(t, a, dim) * density
        self.logger.debug(f"Liebscher estimate: n={z.shape[0]}, d={dim}, a={a}, h={h}")
        return Generator(dim=dim, table=TabulatedFunction(grid, np.maximum(values, 0.0)))


class StuteWernerEstimator(GeneratorEstimator):
    """Kernel estimate of the law of ||Y||^2 divided by the radial Jacobian."""

    kind = EstimatorKind.STUTE_WERNER

    def estimate(self: Self, z: Union[DataMatrix, np.ndarray], sigma: MatrixLike) -> Generator:
        z = _complete_array(z)
        dim = z.shape[1]
        h, grid = self.config.h, self.config.grid

        radii = _squared_radii(z, sigma)
        u = grid.nodes
        density = _kernel_density(radii, u, h)

        values = np.zeros_like(u)
        if dim == 2:
            values = 2.0 / surface_area(dim) * density
        else:
            inside = u >= h
            values[inside] = 2.0 / surface_area(dim) * u[inside] ** (1 - dim / 2) * density[inside]
            if not inside.all():
                warnings.warn(
                    f"Stute-Werner estimate set to its limit 0 on {int((~inside).sum())} node(s) below h={h}",
                    BoundaryWarning,
                    stacklevel=2,
                )

        self.logger.debug(f"Stute-Werner estimate: n={z.shape[0]}, d={dim}, h={h}")
        return Generator(dim=dim, table=TabulatedFunction(grid, np.maximum(values, 0.0)))


ESTIMATORS: dict[EstimatorKind, type[GeneratorEstimator]] = {
    EstimatorKind.LIEBSCHER: LiebscherEstimator,
    EstimatorKind.STUTE_WERNER: StuteWernerEstimator,
}


def make_estimator(kind: EstimatorKind, config: KernelConfig) -> GeneratorEstimator:
    return ESTIMATORS[EstimatorKind(kind)](config)


def liebscher_estimate(
    z: Union[DataMatrix, np.ndarray],
    sigma: MatrixLike,
    cfg: Optional[KernelConfig] = None,
) -> Generator:
    """Liebscher estimate of the generator; see LiebscherEstimator."""
    return LiebscherEstimator(cfg or KernelConfig()).estimate(z, sigma)


def stute_werner_estimate(
    z: Union[DataMatrix, np.ndarray],
    sigma: MatrixLike,
    h: float,
    grid: Optional[UniformGrid] = None,
) -> Generator:
    """Stute-Werner estimate of the generator; see StuteWernerEstimator."""
    config = KernelConfig(h=h) if grid is None else KernelConfig(h=h, grid=grid)
    return StuteWernerEstimator(config).estimate(z, sigma)
