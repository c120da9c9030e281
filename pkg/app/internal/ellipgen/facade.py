"""
High-level facade for ellipgen operations.

Composes the generator, copula, estimation and simulation modules into the
operations the command-line surface exposes. This is the primary interface
for application code.
"""

from typing import Callable, Optional, Sequence

from typing_extensions import Self

import numpy as np

from .config import (
    TOL_NORM_ESTIMATED,
    DensityKind,
    DiscrepancyConfig,
    MecipConfig,
)
from .copula import copula_density, sample_meta_elliptical
from .exceptions import ConfigurationError
from .generator import Generator, NormalizedGenerator, normalize
from .matrices import CorrMatrix, DataMatrix
from .mecip import MecipResult, mecip_estimate
from .models import ExperimentSpec, FitRecord, MiseRecord, ReplicationRecord
from .simfit import ParametricFamily, simfit_estimate
from .simstudy import run_experiment
from .tabulated import UniformGrid
from ..logging import get_logger


logger = get_logger(__name__)


class EllipGenFacade:
    """
    High-level facade for ellipgen operations.

    Example:
        facade = EllipGenFacade(workers=4)
        result = facade.estimate(data, MecipConfig.for_dimension(data.d))
        normalized = facade.normalize(generator, b=1.0)
    """

    def __init__(self: Self, workers: int = 1):
        """
        Initialize the facade.

        Args:
            workers: Worker processes used by experiments.
        """
        if workers < 1:
            raise ConfigurationError(f"workers must be at least 1, got {workers}")
        self._workers = workers

        logger.debug(f"EllipGenFacade initialized with {workers} worker(s)")

    # =========================================================================
    # Generators
    # =========================================================================

    def normalize(
        self: Self,
        g: Generator,
        b: float = 1.0,
        grid: Optional[UniformGrid] = None,
        tol_norm: float = TOL_NORM_ESTIMATED,
    ) -> NormalizedGenerator:
        """Normalize a generator so that both identification constraints hold."""
        normalized = normalize(g, b, grid=grid, tol_norm=tol_norm)
        logger.info(f"Normalized generator: d={g.dim}, b={b}, residuals={normalized.residuals}")
        return normalized

    def evaluate(
        self: Self,
        g: Generator | NormalizedGenerator,
        kind: DensityKind,
        points: np.ndarray,
        sigma: Optional[CorrMatrix] = None,
    ) -> np.ndarray:
        """
        Evaluate the marginal pdf, cdf or quantile function, or the copula density.

        Args:
            g: Generator.
            kind: Quantity to evaluate.
            points: 1-D array of arguments, or n x d points for the copula density.
            sigma: Copula correlation matrix (copula only).
        """
        kind = DensityKind(kind)
        g = self._normalized(g)
        if kind is DensityKind.COPULA:
            if sigma is None:
                raise ConfigurationError("The copula density needs a correlation matrix")
            return np.atleast_1d(copula_density(g, sigma, np.atleast_2d(points)))

        law = g.marginal
        points = np.asarray(points, dtype=float).reshape(-1)
        if kind is DensityKind.PDF:
            return np.asarray(law.pdf(points))
        if kind is DensityKind.CDF:
            return np.asarray(law.cumulative(points))
        return np.asarray(law.quantile(points))

    # =========================================================================
    # Sampling
    # =========================================================================

    def sample(
        self: Self,
        g: Generator | NormalizedGenerator,
        sigma: CorrMatrix,
        n: int,
        seed: int,
        margins: Optional[Sequence] = None,
    ) -> DataMatrix:
        """Draw n rows of the meta-elliptical (or trans-elliptical) law."""
        data = sample_meta_elliptical(self._normalized(g), sigma, n, np.random.default_rng(seed), margins=margins)
        logger.info(f"Sampled {n} row(s) in dimension {sigma.d}")
        return data

    # =========================================================================
    # Estimation
    # =========================================================================

    def estimate(self: Self, data: DataMatrix, config: MecipConfig) -> MecipResult:
        """Run the iterative generator estimator on data."""
        logger.info(
            f"Estimating generator: n={data.n}, d={data.d}, init={config.init.value}, "
            f"estimator={config.estimator.value}, a={config.a}, h={config.h}"
        )
        return mecip_estimate(data, config)

    def fit(
        self: Self,
        data: DataMatrix,
        family: ParametricFamily,
        config: DiscrepancyConfig,
    ) -> tuple[tuple[float, float], list[FitRecord]]:
        """Grid-search the parameters of a generator family."""
        logger.info(
            f"Fitting {family.family.value} over {len(family.grid)} tuple(s) "
            f"with the {config.kind.value} discrepancy"
        )
        return simfit_estimate(data, family, config)

    # =========================================================================
    # Experiments
    # =========================================================================

    def run_experiment(
        self: Self,
        spec: ExperimentSpec,
        on_record: Optional[Callable[[ReplicationRecord], None]] = None,
    ) -> list[MiseRecord]:
        """Run a simulation study sweep."""
        return run_experiment(spec, workers=self._workers, on_record=on_record)

    def _normalized(self: Self, g: Generator | NormalizedGenerator) -> NormalizedGenerator:
        # marginal laws and copula densities need the scale pinned down
        if isinstance(g, NormalizedGenerator):
            return g
        return self.normalize(g)
