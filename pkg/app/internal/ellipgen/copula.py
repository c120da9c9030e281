"""
Meta-elliptical copulas: rank transforms, Kendall-tau correlation
estimation, nearest-correlation projection, copula density evaluation and
trans-elliptical sampling.
"""

import math
import warnings
from typing import Optional, Sequence, Union

import numpy as np
from scipy.stats import kendalltau, rankdata

from .config import EPS_INV
from .elliptical import EllipticalModel, sample_elliptical
from .exceptions import (
    BoundaryWarning,
    DataInvariantError,
    DegenerateColumnError,
    InsufficientPairsError,
    OutOfDomainError,
    ProjectionWarning,
)
from .generator import Generator, MarginalLaw, NormalizedGenerator, marginal_law
from .matrices import CorrMatrix, DataMatrix, PseudoObs
from ..logging import get_logger


logger = get_logger(__name__)

# pairwise-complete sample size up to which tau is computed by pair enumeration
EXACT_TAU_LIMIT = 5000
_TAU_CHUNK = 512
PROJECTION_ROUNDS = 200
PROJECTION_TOL = 1e-8
U_EPS = 1e-12

AnyGenerator = Union[Generator, NormalizedGenerator]


# =============================================================================
# Ranks and Kendall tau
# =============================================================================

def pseudo_observations(x: DataMatrix) -> PseudoObs:
    """
    Columnwise ranks of the observed entries divided by (n_j + 1).

    Ties get average ranks; missing entries stay missing.

    Raises:
        DegenerateColumnError: If a column is constant on its observed entries.
    """
    values = np.full(x.values.shape, np.nan)
    for column in range(x.d):
        observed = ~x.mask[:, column]
        entries = x.values[observed, column]
        if entries.size < 2:
            raise DataInvariantError(f"Column {column} has fewer than two observed entries")
        if np.ptp(entries) == 0:
            raise DegenerateColumnError(column)

        values[observed, column] = rankdata(entries, method="average") / (entries.size + 1)

    return PseudoObs(values=values, mask=x.mask)


def _tau_by_pairs(x: np.ndarray, y: np.ndarray) -> float:
    m = x.size
    total = 0.0
    for start in range(0, m, _TAU_CHUNK):
        dx = np.sign(x[start:start + _TAU_CHUNK, None] - x[None, :])
        dy = np.sign(y[start:start + _TAU_CHUNK, None] - y[None, :])
        total += float(np.sum(dx * dy))
    # every unordered pair is counted twice
    return total / (m * (m - 1))


def _tied_pairs(x: np.ndarray) -> float:
    _, counts = np.unique(x, return_counts=True)
    return float(np.sum(counts * (counts - 1) / 2))


def _tau_by_merge_sort(x: np.ndarray, y: np.ndarray) -> float:
    """Tau with ties scored 0, recovered from scipy's tau-b."""
    m = x.size
    pairs = m * (m - 1) / 2
    tau_b = kendalltau(x, y, variant="b").statistic
    if not np.isfinite(tau_b):
        return 0.0
    score = tau_b * math.sqrt((pairs - _tied_pairs(x)) * (pairs - _tied_pairs(y)))
    return float(score / pairs)


def kendall_tau(x: np.ndarray, y: np.ndarray) -> float:
    """
    Empirical Kendall tau: the mean of sign products over all pairs.

    Raises:
        InsufficientPairsError: If fewer than two pairs of values are given.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise InsufficientPairsError((0, 1), x.size)
    if x.size <= EXACT_TAU_LIMIT:
        return _tau_by_pairs(x, y)
    return _tau_by_merge_sort(x, y)


def kendall_tau_matrix(x: Union[DataMatrix, PseudoObs]) -> np.ndarray:
    """
    Matrix of Kendall taus over pairwise-complete rows.

    Args:
        x: Data or pseudo-observations (ranks give the same taus).

    Returns:
        Symmetric d x d array with unit diagonal.

    Raises:
        InsufficientPairsError: If a column pair shares fewer than two complete rows.
    """
    d = x.values.shape[1]
    tau = np.eye(d)
    for k in range(d):
        for l in range(k + 1, d):
            both = ~(x.mask[:, k] | x.mask[:, l])
            count = int(both.sum())
            if count < 2:
                raise InsufficientPairsError((k, l), count)
            tau[k, l] = tau[l, k] = kendall_tau(x.values[both, k], x.values[both, l])
    return tau


# =============================================================================
# Correlation matrices
# =============================================================================

def _satisfies_corr(m: np.ndarray, eps: float) -> bool:
    return (
        np.allclose(m, m.T, atol=1e-12)
        and np.allclose(np.diag(m), 1.0, atol=1e-12)
        and bool(np.all(np.abs(m) <= 1.0))
        and float(np.linalg.eigvalsh(m)[0]) >= eps
    )


def _clip_eigenvalues(m: np.ndarray, eps: float) -> np.ndarray:
    eigenvalues, eigenvectors = np.linalg.eigh(m)
    clipped = (eigenvectors * np.maximum(eigenvalues, eps)) @ eigenvectors.T
    return (clipped + clipped.T) / 2


def project_psd(m, eps: float = EPS_INV) -> CorrMatrix:
    """
    Nearest correlation matrix by alternating projections with Dykstra's correction.

    Alternates between eigenvalue clipping at eps and resetting the diagonal
    to 1 until successive iterates differ by less than 1e-8 in max norm or
    200 rounds have run. A final shrink toward the identity lifts the
    smallest eigenvalue to eps.

    Args:
        m: Symmetric matrix with unit diagonal.
        eps: Lower bound on the smallest eigenvalue.
    """
    m = np.asarray(m, dtype=float)
    if _satisfies_corr(m, eps):
        return CorrMatrix(m, eps=eps)

    current = (m + m.T) / 2
    correction = np.zeros_like(current)
    converged = False
    for round_index in range(PROJECTION_ROUNDS):
        shifted = current - correction
        clipped = _clip_eigenvalues(shifted, eps)
        correction = clipped - shifted

        following = clipped.copy()
        np.fill_diagonal(following, 1.0)
        change = float(np.max(np.abs(following - current)))
        current = following
        if change < PROJECTION_TOL:
            converged = True
            break

    if not converged:
        warnings.warn(
            f"PSD projection stopped after {PROJECTION_ROUNDS} rounds",
            ProjectionWarning,
            stacklevel=2,
        )
        logger.warning(f"PSD projection did not converge in {PROJECTION_ROUNDS} rounds")

    smallest = float(np.linalg.eigvalsh(current)[0])
    if smallest < eps:
        weight = (eps - smallest) / (1.0 - smallest)
        current = (1.0 - weight) * current + weight * np.eye(current.shape[0])
        np.fill_diagonal(current, 1.0)

    logger.debug(f"Projected correlation matrix after {round_index + 1} round(s)")
    return CorrMatrix(np.clip(current, -1.0, 1.0), eps=eps)


def corr_from_tau(tau, eps: float = EPS_INV) -> CorrMatrix:
    """
    Correlation matrix sin(pi tau / 2), projected when not positive definite with margin eps.
    """
    tau = np.asarray(tau, dtype=float)
    values = np.sin(np.pi * tau / 2)
    values = (values + values.T) / 2
    np.fill_diagonal(values, 1.0)
    if _satisfies_corr(values, eps):
        return CorrMatrix(values, eps=eps)

    logger.info("Kendall-tau correlation matrix is not positive definite, projecting")
    return project_psd(values, eps)


# =============================================================================
# Copula density and sampling
# =============================================================================

def _marginal_of(g: AnyGenerator) -> MarginalLaw:
    if isinstance(g, NormalizedGenerator):
        return g.marginal
    return marginal_law(g)


def copula_density(g: AnyGenerator, sigma: CorrMatrix, u) -> Union[float, np.ndarray]:
    """
    Meta-elliptical copula density g(Q^T Sigma^-1 Q) / (|Sigma|^(1/2) prod f_g(Q_k)).

    Args:
        g: Generator (normalized or not).
        sigma: Copula correlation matrix.
        u: A point of (0, 1)^d or an array of such points (one per row).

    Returns:
        Density value(s); +inf where some f_g(Q_g(u_k)) vanishes.

    Raises:
        OutOfDomainError: If some coordinate is not strictly inside (0, 1).
    """
    points = np.asarray(u, dtype=float)
    single = points.ndim == 1
    points = np.atleast_2d(points)
    if points.shape[1] != sigma.d:
        raise OutOfDomainError(f"Points must have {sigma.d} coordinates, got {points.shape[1]}")
    if np.any(~(points > 0) | ~(points < 1)):
        raise OutOfDomainError("Copula density needs points strictly inside (0, 1)^d")

    law = _marginal_of(g)
    q = law.quantile(points)
    quad = np.einsum("ij,ij->i", q, np.linalg.solve(sigma.values, q.T).T)
    numerator = g(quad)
    denominator = math.sqrt(np.linalg.det(sigma.values)) * np.prod(law.pdf(q), axis=1)

    vanishing = denominator <= 0
    if np.any(vanishing):
        warnings.warn(
            f"Marginal density vanishes at {int(vanishing.sum())} point(s); density set to inf",
            BoundaryWarning,
            stacklevel=2,
        )

    with np.errstate(divide="ignore", invalid="ignore"):
        density = np.where(vanishing, np.inf, numerator / np.where(vanishing, 1.0, denominator))
    return float(density[0]) if single else density


def sample_meta_elliptical(
    g: AnyGenerator,
    sigma: CorrMatrix,
    n: int,
    rng: np.random.Generator,
    margins: Optional[Sequence] = None,
) -> DataMatrix:
    """
    Draw n rows of the meta-elliptical copula ME_d(sigma, g).

    Args:
        g: Generator of dimension d.
        sigma: Copula correlation matrix.
        n: Number of rows.
        rng: Random stream.
        margins: Optional per-column distributions with a ppf method
            (e.g. frozen scipy.stats laws); None entries keep uniform margins.
    """
    base = g.base if isinstance(g, NormalizedGenerator) else g
    x = sample_elliptical(EllipticalModel.centered(sigma, base), n, rng)
    if n == 0:
        return x

    law = _marginal_of(g)
    # saturated cdf values would send margin quantiles to +-inf
    u = np.clip(law.cumulative(x.values), U_EPS, 1.0 - U_EPS)
    if margins is not None:
        if len(margins) != sigma.d:
            raise OutOfDomainError(f"Expected {sigma.d} margins, got {len(margins)}")
        for column, margin in enumerate(margins):
            if margin is not None:
                u[:, column] = margin.ppf(u[:, column])

    return DataMatrix.from_array(u)
