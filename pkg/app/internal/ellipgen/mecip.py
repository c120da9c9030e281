"""
Iterative nonparametric estimation of a meta-elliptical copula generator.

The estimator alternates three steps until the generator stops moving:
map the pseudo-observations through the quantile function of the current
generator, estimate the generator of the resulting elliptical sample and
normalize it. Rows with missing entries are completed at every iteration by
draws from the conditional elliptical law given their observed entries.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

from typing_extensions import Self

import numpy as np
from scipy.special import gamma
from scipy.stats import norm

from .config import InitMethod, MecipConfig
from .copula import corr_from_tau, kendall_tau_matrix, pseudo_observations
from .elliptical import (
    EllipticalModel,
    GeneratorEstimator,
    conditional_model,
    make_estimator,
    sample_elliptical,
)
from .exceptions import EllipGenWarning, ZeroGeneratorError
from .generator import Generator, NormalizedGenerator, normalize, scaling_constants
from .matrices import CorrMatrix, DataMatrix, PseudoObs
from .models import MecipDiagnostics
from ..logging import get_logger


logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class MecipState:
    """
    State of the fixed-point iteration after n_iter steps.

    Attributes:
        n_iter: Number of completed steps.
        g_current: Latest normalized generator.
        z_current: Latest completed elliptical sample (empty before the first step).
        sigma: Copula correlation matrix.
        history: L2 distances between successive generators.
        clamp_counts: Quantile arguments clamped at each step.
    """
    n_iter: int
    g_current: NormalizedGenerator
    z_current: np.ndarray
    sigma: CorrMatrix
    history: tuple[float, ...] = ()
    clamp_counts: tuple[int, ...] = ()

    @classmethod
    def start(cls, g: NormalizedGenerator, sigma: CorrMatrix) -> "MecipState":
        return cls(n_iter=0, g_current=g, z_current=np.empty((0, sigma.d)), sigma=sigma)


@dataclass(frozen=True, eq=False)
class MecipResult:
    """
    Outcome of mecip_estimate.

    Attributes:
        g_final: Last normalized generator.
        g_initial: Normalized starting generator.
        sigma: Kendall-tau correlation matrix.
        history: L2 distances between successive generators (nonempty).
        converged: True iff the last distance is below tol.
        warnings: Messages of the numerical warnings raised during the run.
        clamp_counts: Quantile arguments clamped at each step.
        tol: Convergence threshold of the run.
    """
    g_final: NormalizedGenerator
    g_initial: NormalizedGenerator
    sigma: CorrMatrix
    history: tuple[float, ...]
    converged: bool
    tol: float
    warnings: tuple[str, ...] = field(default_factory=tuple)
    clamp_counts: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self: Self) -> None:
        if not self.history:
            raise ValueError("A MECIP result needs at least one iteration")
        if self.converged != (self.history[-1] < self.tol):
            raise ValueError("Convergence flag disagrees with the last distance")

    @property
    def iterations(self: Self) -> int:
        return len(self.history)

    def diagnostics(self: Self) -> MecipDiagnostics:
        return MecipDiagnostics(
            iterations=self.iterations,
            distances=list(self.history),
            clamp_counts=list(self.clamp_counts),
            converged=self.converged,
            warnings=list(self.warnings),
            initial_residuals=self.g_initial.residuals,
            final_residuals=self.g_final.residuals,
            tol=self.tol,
        )


# =============================================================================
# Initialization
# =============================================================================

def gaussian_start(dim: int, cfg: MecipConfig) -> NormalizedGenerator:
    """Normalized exp(-t), with the moment integrals Gamma(d/2) and Gamma((d-1)/2) taken exactly."""
    alpha, beta = scaling_constants(dim, cfg.b, gamma(dim / 2), gamma((dim - 1) / 2))
    start = Generator.from_callable(lambda t: alpha * np.exp(-beta * t), dim, cfg.grid)
    return normalize(start, cfg.b, tol_norm=cfg.tol_norm)


def inv_phi_scale(dim: int, b: float) -> float:
    """Factor taking N(0, sigma) onto the elliptical law with the normalized exp(-t) generator."""
    _, beta = scaling_constants(dim, b, gamma(dim / 2), gamma((dim - 1) / 2))
    return 1.0 / math.sqrt(2.0 * beta)


def initialize(
    cfg: MecipConfig,
    u: PseudoObs,
    sigma: CorrMatrix,
    estimator: Optional[GeneratorEstimator] = None,
) -> NormalizedGenerator:
    """
    Starting generator of the iteration.

    gaussian normalizes exp(-t). identity estimates the generator of the
    complete rows of U as if they were elliptical. inv-phi does the same
    after mapping U through the standard normal quantile function, scaled by
    1/sqrt(2 beta) so that a Gaussian copula already sits on the normalized
    exp(-beta t) generator and the estimate needs no grid beyond cfg.grid.

    Args:
        cfg: Run configuration.
        u: Pseudo-observations.
        sigma: Copula correlation matrix.
        estimator: Generator estimator (defaults to the configured one).
    """
    if cfg.init is InitMethod.GAUSSIAN:
        return gaussian_start(u.d, cfg)

    complete = u.complete_rows()
    if complete.shape[0] < 2:
        logger.warning(
            f"Only {complete.shape[0]} complete row(s), falling back to the gaussian start"
        )
        return gaussian_start(u.d, cfg)

    if cfg.init is InitMethod.INV_PHI:
        complete = norm.ppf(complete) * inv_phi_scale(u.d, cfg.b)

    estimator = estimator or make_estimator(cfg.estimator, cfg.kernel)
    return normalize(estimator.estimate(complete, sigma), cfg.b, grid=cfg.grid, tol_norm=cfg.tol_norm)


# =============================================================================
# Iteration
# =============================================================================

def impute_missing(
    z: np.ndarray,
    sigma: CorrMatrix,
    g: NormalizedGenerator,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Complete every row by a draw from the conditional law given its observed entries.

    Args:
        z: n x d array, NaN where missing.
        sigma: Correlation matrix of the centered elliptical law.
        g: Its generator.
        rng: Random stream, consumed row by row in row order.

    Returns:
        Completed copy of z; imputed entries lie in [-sqrt(T_max), sqrt(T_max)].

    Raises:
        SingularBlockError: If an observed block of sigma is not invertible.
    """
    completed = np.array(z, dtype=float)
    missing = np.isnan(completed)
    model = EllipticalModel.centered(sigma, g.base)
    bound = math.sqrt(g.base.t_max)

    for row in np.flatnonzero(missing.any(axis=1)):
        observed_idx = np.flatnonzero(~missing[row])
        try:
            conditional = conditional_model(model, observed_idx, completed[row, observed_idx])
            draw = sample_elliptical(conditional, 1, rng).values[0]
        except ZeroGeneratorError:
            logger.warning(f"Row {row} lies outside the generator support, imputing its conditional mean")
            draw = _conditional_mean(sigma.values, observed_idx, completed[row, observed_idx])

        completed[row, missing[row]] = np.clip(draw, -bound, bound)

    return completed


def _conditional_mean(sigma: np.ndarray, observed_idx: np.ndarray, observed_vals: np.ndarray) -> np.ndarray:
    missing_idx = np.setdiff1d(np.arange(sigma.shape[0]), observed_idx)
    block = sigma[np.ix_(observed_idx, observed_idx)]
    cross = sigma[np.ix_(missing_idx, observed_idx)]
    return cross @ np.linalg.solve(block, observed_vals)


def mecip_step(
    state: MecipState,
    u: PseudoObs,
    cfg: MecipConfig,
    rng: np.random.Generator,
    estimator: Optional[GeneratorEstimator] = None,
) -> MecipState:
    """
    One fixed-point step: quantile transform, imputation, estimation, normalization.

    Args:
        state: Current state.
        u: Pseudo-observations.
        cfg: Run configuration.
        rng: Random stream for the imputation draws (untouched on complete data).
        estimator: Generator estimator (defaults to the configured one).

    Returns:
        The next state, with the distance between successive generators appended.
    """
    estimator = estimator or make_estimator(cfg.estimator, cfg.kernel)
    law = state.g_current.marginal

    lower = 1.0 / (2 * u.n)
    observed = ~u.mask
    raw = u.values[observed]
    clipped = np.clip(raw, lower, 1.0 - lower)
    clamp_count = int(np.count_nonzero(clipped != raw)) + law.count_clamped(clipped)

    z = np.full(u.values.shape, np.nan)
    z[observed] = law.quantile(clipped)
    if u.has_missing:
        z = impute_missing(z, state.sigma, state.g_current, rng)

    g_next = normalize(
        estimator.estimate(z, state.sigma), cfg.b, grid=cfg.grid, tol_norm=cfg.tol_norm
    )
    distance = g_next.table.l2_distance(state.g_current.table)
    logger.debug(f"Iteration {state.n_iter + 1}: distance={distance:.3e}, clamped={clamp_count}")

    return MecipState(
        n_iter=state.n_iter + 1,
        g_current=g_next,
        z_current=z,
        sigma=state.sigma,
        history=state.history + (distance,),
        clamp_counts=state.clamp_counts + (clamp_count,),
    )


def mecip_estimate(
    x: DataMatrix,
    cfg: MecipConfig,
    estimator: Optional[GeneratorEstimator] = None,
) -> MecipResult:
    """
    Estimate the generator of the meta-elliptical copula of X.

    Runs the rank transform, the Kendall-tau correlation estimate
    (pairwise-complete when entries are missing), the initialization and
    then fixed-point steps until the distance between successive
    generators drops below tol or n_max steps have run.

    Args:
        x: Observations, possibly with missing entries.
        cfg: Run configuration.
        estimator: Generator estimator (defaults to the configured one).
    """
    estimator = estimator or make_estimator(cfg.estimator, cfg.kernel)
    rng = np.random.default_rng(cfg.seed)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", EllipGenWarning)

        u = pseudo_observations(x)
        sigma = corr_from_tau(kendall_tau_matrix(u))
        g_initial = initialize(cfg, u, sigma, estimator)

        state = MecipState.start(g_initial, sigma)
        while True:
            state = mecip_step(state, u, cfg, rng, estimator)
            if state.history[-1] < cfg.tol or state.n_iter >= cfg.n_max:
                break

    messages = tuple(
        f"{w.category.__name__}: {w.message}"
        for w in caught
        if issubclass(w.category, EllipGenWarning)
    )
    converged = state.history[-1] < cfg.tol
    logger.info(
        f"MECIP finished after {state.n_iter} iteration(s): "
        f"converged={converged}, last distance={state.history[-1]:.3e}, warnings={len(messages)}"
    )

    return MecipResult(
        g_final=state.g_current,
        g_initial=g_initial,
        sigma=sigma,
        history=state.history,
        converged=converged,
        tol=cfg.tol,
        warnings=messages,
        clamp_counts=state.clamp_counts,
    )
