"""
Density generators of elliptical distributions.

A generator g is a nonnegative function on [0, T_max] tabulated on a
uniform grid and tagged with the dimension d of the elliptical law it
defines. This module normalizes generators so that both identification
constraints hold, derives the common marginal law (f_g, F_g, Q_g),
rescales generators within their scale family and computes the generators
of subvectors.

All radial integrals are computed after the substitution t = r**2, with the
trapezoid rule on an r-lattice, and are truncated at T_max.
"""

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

from typing_extensions import Self

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.special import gamma

from .config import TAIL_MASS_THRESHOLD, TOL_NORM_ANALYTIC
from .exceptions import (
    ClampWarning,
    ConfigurationError,
    GridTooShortError,
    NormalizationError,
    OutOfDomainError,
    TailMassWarning,
    ZeroGeneratorError,
)
from .tabulated import DEFAULT_GRID, TabulatedFunction, UniformGrid
from ..logging import get_logger


logger = get_logger(__name__)

# r-lattice nodes per t-grid node in the moment integrals
_RADIAL_OVERSAMPLING = 2
# rows of the (node, r) integrand evaluated at once
_CHUNK_ROWS = 256
_NORMALIZE_ROUNDS = 8


def surface_area(dim: int) -> float:
    """Surface area s_d = 2 pi^(d/2) / Gamma(d/2) of the unit sphere of R^d."""
    if dim < 1:
        raise OutOfDomainError(f"Sphere dimension must be at least 1, got {dim}")
    return 2.0 * math.pi ** (dim / 2) / gamma(dim / 2)


@dataclass(frozen=True, eq=False)
class Generator:
    """
    Nonnegative tabulated function on [0, T_max] tagged with a dimension.

    Attributes:
        dim: Dimension d of the elliptical law.
        table: Values of g on the grid.
    """
    dim: int
    table: TabulatedFunction

    def __post_init__(self: Self) -> None:
        if self.dim < 1:
            raise ConfigurationError(f"Generator dimension must be positive, got {self.dim}")
        if self.table.grid.start != 0.0:
            raise ConfigurationError("Generator grids must start at 0")
        if np.any(self.table.values < 0):
            raise ConfigurationError("Generator values must be nonnegative")
        if not np.any(self.table.values > 0):
            raise ZeroGeneratorError("Generator has no positive value")

    @classmethod
    def from_callable(cls, func, dim: int, grid: UniformGrid = DEFAULT_GRID) -> "Generator":
        """Tabulate a vectorized function of t on grid."""
        return cls(dim=dim, table=TabulatedFunction.from_callable(func, grid))

    @property
    def grid(self: Self) -> UniformGrid:
        return self.table.grid

    @property
    def values(self: Self) -> np.ndarray:
        return self.table.values

    @property
    def t_max(self: Self) -> float:
        return self.table.grid.stop

    def __call__(self: Self, t):
        return self.table(t)


def gaussian_generator(dim: int, grid: UniformGrid = DEFAULT_GRID) -> Generator:
    """Generator exp(-t/2) / (2 pi)^(d/2) of the standard normal law of R^d."""
    return Generator.from_callable(
        lambda t: np.exp(-t / 2) / (2 * math.pi) ** (dim / 2), dim, grid
    )


# =============================================================================
# Moment integrals
# =============================================================================

def _radial_lattice(g: Generator) -> np.ndarray:
    count = _RADIAL_OVERSAMPLING * (g.grid.count - 1) + 1
    return np.linspace(0.0, math.sqrt(g.t_max), count)


def radial_moment(g: Generator, power: int) -> float:
    """
    Integral of 2 r^power g(r^2) over [0, sqrt(T_max)].

    With power = k - 1 this is the integral of t^(k/2 - 1) g(t) dt.
    """
    r = _radial_lattice(g)
    return float(trapezoid(2.0 * r ** power * g(r * r), r))


def tail_fraction(g: Generator, power: Optional[int] = None) -> float:
    """
    Share of the first moment integral contributed by the last tenth of [0, T_max].

    Args:
        g: Generator.
        power: Radial power of the integrand (defaults to d - 1).
    """
    power = g.dim - 1 if power is None else power
    r = _radial_lattice(g)
    integrand = 2.0 * r ** power * g(r * r)
    total = trapezoid(integrand, r)
    if total <= 0:
        return 0.0

    tail = r * r >= 0.9 * g.t_max
    return float(trapezoid(integrand[tail], r[tail]) / total)


def moment_integrals(g: Generator) -> tuple[float, float]:
    """
    The two moment integrals of the normalization constraints.

    Args:
        g: Generator of dimension d >= 2.

    Returns:
        I1 = int t^(d/2-1) g(t) dt and I2 = int t^(d/2-3/2) g(t) dt, truncated at T_max.

    Raises:
        ZeroGeneratorError: If either integral vanishes.
    """
    if g.dim < 2:
        raise OutOfDomainError(f"Moment integrals need d >= 2, got {g.dim}")

    i1 = radial_moment(g, g.dim - 1)
    i2 = radial_moment(g, g.dim - 2)
    if not (i1 > 0 and i2 > 0):
        raise ZeroGeneratorError(f"Moment integrals vanish: I1={i1}, I2={i2}")

    fraction = tail_fraction(g)
    if fraction > TAIL_MASS_THRESHOLD:
        warnings.warn(
            f"{fraction:.2e} of the generator mass lies in the last tenth of [0, {g.t_max}]",
            TailMassWarning,
            stacklevel=2,
        )

    return i1, i2


# =============================================================================
# Normalization
# =============================================================================

@dataclass(frozen=True, eq=False)
class NormalizedGenerator:
    """
    Generator satisfying both identification constraints within tol_norm.

    Attributes:
        base: The normalized generator itself.
        b: Value of the marginal density at 0.
        residuals: Deviations (s_d I1 / 2 - 1, s_{d-1} I2 / 2 - b).
        tol_norm: Tolerance the residuals were checked against.
    """
    base: Generator
    b: float
    residuals: tuple[float, float]
    tol_norm: float = TOL_NORM_ANALYTIC

    def __post_init__(self: Self) -> None:
        if max(abs(self.residuals[0]), abs(self.residuals[1])) > self.tol_norm:
            raise NormalizationError(
                f"Residuals {self.residuals} exceed tolerance {self.tol_norm}",
                residuals=self.residuals,
            )

    @property
    def dim(self: Self) -> int:
        return self.base.dim

    @property
    def grid(self: Self) -> UniformGrid:
        return self.base.grid

    @property
    def table(self: Self) -> TabulatedFunction:
        return self.base.table

    @property
    def values(self: Self) -> np.ndarray:
        return self.base.values

    def __call__(self: Self, t):
        return self.base(t)

    @cached_property
    def marginal(self: Self) -> "MarginalLaw":
        """Marginal law (density, cdf, quantile) of the normalized generator."""
        return marginal_law(self.base)


def _residuals(dim: int, b: float, i1: float, i2: float) -> tuple[float, float]:
    return (
        surface_area(dim) * i1 / 2 - 1.0,
        surface_area(dim - 1) * i2 / 2 - b,
    )


def scaling_constants(dim: int, b: float, i1: float, i2: float) -> tuple[float, float]:
    """Constants (alpha, beta) making t -> alpha g(beta t) satisfy both constraints, given I1 and I2 of g."""
    beta = (b * surface_area(dim) * i1 / (surface_area(dim - 1) * i2)) ** 2
    alpha = 2.0 * beta ** (dim / 2) / (surface_area(dim) * i1)
    return alpha, beta


def normalize(
    g: Generator,
    b: float = 1.0,
    grid: Optional[UniformGrid] = None,
    tol_norm: float = TOL_NORM_ANALYTIC,
) -> NormalizedGenerator:
    """
    Rescale g into t -> alpha g(beta t) so that both constraints hold.

    The closed-form alpha, beta are refined for a few rounds against the
    integrals of the resampled table, so the constraints hold on the output
    grid itself.

    Args:
        g: Generator of dimension d >= 2.
        b: Target value of the marginal density at 0.
        grid: Output grid (defaults to the grid of g).
        tol_norm: Tolerance on both constraint residuals.

    Returns:
        The normalized generator.

    Raises:
        ZeroGeneratorError: If g carries no mass.
        GridTooShortError: If the output needs g beyond T_max while g still
            carries mass near T_max.
        NormalizationError: If the refinement does not reach tol_norm.
    """
    if not b > 0:
        raise ConfigurationError(f"b must be positive, got {b}")

    out_grid = grid or g.grid
    i1, i2 = moment_integrals(g)
    residuals = _residuals(g.dim, b, i1, i2)
    if out_grid == g.grid and max(map(abs, residuals)) <= tol_norm:
        return NormalizedGenerator(base=g, b=b, residuals=residuals, tol_norm=tol_norm)

    alpha, beta = scaling_constants(g.dim, b, i1, i2)
    if beta * out_grid.stop > g.t_max:
        fraction = tail_fraction(g)
        if fraction > TAIL_MASS_THRESHOLD:
            raise GridTooShortError(
                f"Rescaling by beta={beta:.4g} needs g up to {beta * out_grid.stop:.4g} "
                f"but g is tabulated up to {g.t_max} with tail fraction {fraction:.2e}"
            )

    for round_index in range(_NORMALIZE_ROUNDS):
        candidate = Generator(
            dim=g.dim,
            table=TabulatedFunction(out_grid, alpha * g(beta * out_grid.nodes)),
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TailMassWarning)
            c1, c2 = moment_integrals(candidate)

        residuals = _residuals(g.dim, b, c1, c2)
        if max(map(abs, residuals)) <= tol_norm:
            logger.debug(
                f"Normalized after {round_index + 1} round(s): "
                f"alpha={alpha:.6g}, beta={beta:.6g}, residuals={residuals}"
            )
            return NormalizedGenerator(base=candidate, b=b, residuals=residuals, tol_norm=tol_norm)

        refine_alpha, refine_beta = scaling_constants(g.dim, b, c1, c2)
        alpha *= refine_alpha
        beta *= refine_beta

    raise NormalizationError(
        f"Normalization did not reach tolerance {tol_norm}", residuals=residuals
    )


def scale_generator(g: Generator, a: float, grid: Optional[UniformGrid] = None) -> Generator:
    """
    Member g_a(t) = a^(d/2) g(a t) of the scale family of g.

    Without an explicit grid, node k of the result is node k of g divided
    by a, so the values are exact rescalings of the table of g.

    Args:
        g: Generator.
        a: Positive scale.
        grid: Optional output grid.
    """
    if not a > 0:
        raise ConfigurationError(f"Scale must be positive, got {a}")

    factor = a ** (g.dim / 2)
    if grid is None:
        return Generator(
            dim=g.dim,
            table=TabulatedFunction(g.grid.scaled(1.0 / a), factor * g.values),
        )

    if a * grid.stop > g.t_max and tail_fraction(g) > TAIL_MASS_THRESHOLD:
        warnings.warn(
            f"Scaled generator truncated: needs g up to {a * grid.stop:.4g}, "
            f"tabulated up to {g.t_max}",
            TailMassWarning,
            stacklevel=2,
        )
    return Generator(dim=g.dim, table=TabulatedFunction(grid, factor * g(a * grid.nodes)))


# =============================================================================
# Marginal law
# =============================================================================

@dataclass(frozen=True, eq=False)
class MarginalLaw:
    """
    Common marginal law of the coordinates of E_d(0, Sigma, g), Sigma a correlation matrix.

    Attributes:
        density: f_g on [0, x_max]; the even extension is implied.
        cdf: F_g on [-x_max, x_max], or None before marginal_cdf.
        dim: Dimension d of the generator.
    """
    density: TabulatedFunction
    cdf: Optional[TabulatedFunction]
    dim: int

    @property
    def x_max(self: Self) -> float:
        return self.density.grid.stop

    def pdf(self: Self, x):
        return self.density(np.abs(x))

    def cumulative(self: Self, x):
        """F_g(x), equal to 0 below -x_max and 1 above x_max."""
        self._require_cdf()
        return self.cdf(x, above=1.0)

    def quantile(self: Self, u):
        """
        Q_g(u) by monotone inversion of F_g, odd around u = 1/2.

        Raises:
            OutOfDomainError: If some u is not in (0, 1).
        """
        self._require_cdf()
        u = np.asarray(u, dtype=float)
        if np.any(~(u > 0) | ~(u < 1)):
            raise OutOfDomainError("Quantile arguments must lie in (0, 1)")

        upper = np.where(u >= 0.5, u, 1.0 - u)
        clamped = int(np.count_nonzero(upper > self._upper_cdf[-1]))
        if clamped:
            warnings.warn(
                f"{clamped} quantile argument(s) beyond the tabulated cdf range, "
                f"clamped to +-{self.x_max:.4g}",
                ClampWarning,
                stacklevel=2,
            )

        magnitude = np.interp(upper, self._upper_cdf, self._upper_nodes, right=self.x_max)
        result = np.where(u >= 0.5, magnitude, -magnitude)
        if result.ndim == 0:
            return float(result)
        return result

    def count_clamped(self: Self, u) -> int:
        """Number of arguments outside the tabulated cdf range."""
        self._require_cdf()
        u = np.asarray(u, dtype=float)
        upper = np.where(u >= 0.5, u, 1.0 - u)
        return int(np.count_nonzero(upper > self._upper_cdf[-1]))

    @cached_property
    def _upper_half(self: Self) -> tuple[np.ndarray, np.ndarray]:
        half = self.density.grid.count - 1
        values = self.cdf.values[half:]
        nodes = self.cdf.grid.nodes[half:]
        # first node of every strictly increasing step
        keep = np.concatenate(([0], np.flatnonzero(np.diff(values) > 0) + 1))
        return values[keep], nodes[keep]

    @property
    def _upper_cdf(self: Self) -> np.ndarray:
        return self._upper_half[0]

    @property
    def _upper_nodes(self: Self) -> np.ndarray:
        return self._upper_half[1]

    def _require_cdf(self: Self) -> None:
        if self.cdf is None:
            raise ConfigurationError("Marginal cdf has not been computed")


def _radial_sum(
    g: Generator,
    offsets: np.ndarray,
    power: int,
    r: np.ndarray,
) -> np.ndarray:
    """Trapezoid integrals of g(offset + r^2) r^power over r, one per offset."""
    weights = r ** power
    result = np.empty(offsets.shape[0])
    for start in range(0, offsets.shape[0], _CHUNK_ROWS):
        block = offsets[start:start + _CHUNK_ROWS, None] + (r * r)[None, :]
        result[start:start + _CHUNK_ROWS] = trapezoid(g(block) * weights[None, :], r, axis=1)
    return result


def marginal_density(g: Generator) -> MarginalLaw:
    """
    Marginal density f_g(t) = s_{d-1} int g(t^2 + r^2) r^(d-2) dr on [0, sqrt(T_max)].

    Args:
        g: Generator of dimension d >= 2.

    Returns:
        MarginalLaw with the density part filled.
    """
    if g.dim < 2:
        raise OutOfDomainError(f"Marginal density needs d >= 2, got {g.dim}")

    x_grid = UniformGrid.linspace(0.0, math.sqrt(g.t_max), g.grid.count)
    r = x_grid.nodes
    values = surface_area(g.dim - 1) * _radial_sum(g, x_grid.nodes ** 2, g.dim - 2, r)
    density = TabulatedFunction(x_grid, np.maximum(values, 0.0))

    mass = 2.0 * density.integral()
    if mass < 1.0 - TAIL_MASS_THRESHOLD:
        warnings.warn(
            f"Marginal density integrates to {mass:.6f} on [-{x_grid.stop:.4g}, {x_grid.stop:.4g}]",
            TailMassWarning,
            stacklevel=2,
        )

    return MarginalLaw(density=density, cdf=None, dim=g.dim)


def marginal_cdf(law: MarginalLaw) -> MarginalLaw:
    """
    Fill the cdf part: F_g(0) = 1/2, cumulative trapezoid outward, clamped to [0, 1].

    Args:
        law: MarginalLaw with its density part.
    """
    x_grid = law.density.grid
    upper = 0.5 + cumulative_trapezoid(law.density.values, dx=x_grid.step, initial=0.0)
    upper = np.maximum.accumulate(np.clip(upper, 0.5, 1.0))
    values = np.concatenate((1.0 - upper[:0:-1], upper))

    cdf_grid = UniformGrid(start=-x_grid.stop, step=x_grid.step, count=2 * x_grid.count - 1)
    return MarginalLaw(density=law.density, cdf=TabulatedFunction(cdf_grid, values), dim=law.dim)


def marginal_law(g: Generator) -> MarginalLaw:
    """Density and cdf of the marginal law of g."""
    return marginal_cdf(marginal_density(g))


def marginal_quantile(law: MarginalLaw, u):
    """Q_g(u); see MarginalLaw.quantile."""
    return law.quantile(u)


# =============================================================================
# Subvectors
# =============================================================================

def subvector_generator(g: Generator, m: int, grid: Optional[UniformGrid] = None) -> Generator:
    """
    Generator g_m(u) = s_{d-m} int g(u + r^2) r^(d-m-1) dr of an m-dimensional subvector.

    Args:
        g: Generator of dimension d.
        m: Subvector dimension, 1 <= m < d.
        grid: Output grid (defaults to the grid of g).
    """
    if not 1 <= m < g.dim:
        raise OutOfDomainError(f"Subvector dimension must be in [1, {g.dim - 1}], got {m}")

    out_grid = grid or g.grid
    r = np.linspace(0.0, math.sqrt(g.t_max), g.grid.count)
    values = surface_area(g.dim - m) * _radial_sum(g, out_grid.nodes, g.dim - m - 1, r)
    return Generator(dim=m, table=TabulatedFunction(out_grid, np.maximum(values, 0.0)))
