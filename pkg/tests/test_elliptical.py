import math
import warnings

import numpy as np
import pytest
from scipy import stats

from app.internal.ellipgen import (
    DEFAULT_GRID,
    BoundaryWarning,
    ConfigurationError,
    CorrMatrix,
    EllipticalModel,
    EstimatorKind,
    FactorizationError,
    KernelConfig,
    LiebscherEstimator,
    OutOfDomainError,
    SingularBlockError,
    SingularSigmaError,
    StuteWernerEstimator,
    conditional_model,
    gaussian_generator,
    liebscher_estimate,
    modular_law,
    normalize,
    psi_a,
    psi_a_prime,
    sample_elliptical,
    stute_werner_estimate,
)
from app.internal.ellipgen.elliptical import make_estimator

from .conftest import WIDE_GRID


def l2_on(t, first, second, lo, hi) -> float:
    inside = (t >= lo) & (t <= hi)
    step = t[1] - t[0]
    return float(np.sqrt(step * np.sum((first[inside] - second[inside]) ** 2)))


def test_modular_law_of_a_density_generator_has_unit_mass(gaussian3):
    law = modular_law(gaussian3)
    assert law.mass == pytest.approx(1.0, abs=1e-4)
    assert law.cdf.values[0] == 0.0
    assert law.cdf.values[-1] == pytest.approx(1.0)
    # R^2 of a standard normal vector in d = 3 is chi-square with 3 degrees of freedom
    assert law.cumulative_squared(3.0) == pytest.approx(stats.chi2(3).cdf(3.0), abs=1e-4)


def test_sample_is_deterministic_in_the_seed(gaussian2, sigma2):
    model = EllipticalModel.centered(sigma2, gaussian2)
    first = sample_elliptical(model, 100, np.random.default_rng(3))
    second = sample_elliptical(model, 100, np.random.default_rng(3))
    other = sample_elliptical(model, 100, np.random.default_rng(4))

    np.testing.assert_array_equal(first.values, second.values)
    assert not np.array_equal(first.values, other.values)
    assert first.values.shape == (100, 2)
    assert not first.has_missing


def test_sample_of_size_zero_is_empty(gaussian2, sigma2, rng):
    empty = sample_elliptical(EllipticalModel.centered(sigma2, gaussian2), 0, rng)
    assert empty.n == 0
    assert empty.d == 2


def test_negative_sample_size_is_rejected(gaussian2, sigma2, rng):
    with pytest.raises(ConfigurationError):
        sample_elliptical(EllipticalModel.centered(sigma2, gaussian2), -1, rng)


def test_gaussian_sample_has_normal_margins_and_target_correlation(gaussian3, rng):
    sigma = CorrMatrix.exchangeable(3, 0.5)
    x = sample_elliptical(EllipticalModel.centered(sigma, gaussian3), 20_000, rng).values

    for column in x.T:
        assert stats.kstest(column, "norm").pvalue > 1e-3
    np.testing.assert_allclose(np.corrcoef(x.T), sigma.values, atol=0.03)


def test_squared_mahalanobis_radii_follow_the_modular_law(gaussian3, sigma3):
    z = sample_elliptical(EllipticalModel.centered(sigma3, gaussian3), 10_000, np.random.default_rng(31)).values
    radii = np.einsum("ij,ij->i", z, np.linalg.solve(sigma3.values, z.T).T)
    law = modular_law(gaussian3)

    assert stats.kstest(radii, law.cumulative_squared).pvalue > 0.01
    drawn = law.sample(10_000, np.random.default_rng(32)) ** 2
    assert stats.ks_2samp(radii, drawn).pvalue > 0.01


def test_singular_dispersion_cannot_be_factored(gaussian2, rng):
    model = EllipticalModel.centered(np.ones((2, 2)), gaussian2)
    with pytest.raises(FactorizationError):
        sample_elliptical(model, 10, rng)


def test_model_checks_shapes(gaussian2, sigma3):
    with pytest.raises(ConfigurationError):
        EllipticalModel.centered(sigma3, gaussian2)
    with pytest.raises(ConfigurationError):
        EllipticalModel.centered(np.array([[1.0, 0.5], [0.2, 1.0]]), gaussian2)


def test_gaussian_conditional_is_gaussian(gaussian3):
    model = EllipticalModel.centered(CorrMatrix.exchangeable(3, 0.5), gaussian3)
    conditional = conditional_model(model, [0], [1.0])

    np.testing.assert_allclose(conditional.mu, [0.5, 0.5])
    np.testing.assert_allclose(conditional.sigma, [[0.75, 0.25], [0.25, 0.75]])

    t = WIDE_GRID.nodes
    inside = t <= 10.0
    expected = gaussian_generator(2, WIDE_GRID).values
    assert conditional.gen.dim == 2
    assert np.max(np.abs(conditional.gen.values[inside] - expected[inside])) <= 1e-4


def test_conditioning_on_a_singular_block_fails(gaussian3):
    sigma = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    model = EllipticalModel.centered(sigma, gaussian3)
    with pytest.raises(SingularBlockError):
        conditional_model(model, [0, 1], [0.3, 0.3])


@pytest.mark.parametrize("observed", [[], [0, 1, 2], [1, 1]])
def test_conditioning_set_must_be_proper(gaussian3, sigma3, observed):
    model = EllipticalModel.centered(sigma3, gaussian3)
    with pytest.raises(OutOfDomainError):
        conditional_model(model, observed, [0.0] * len(observed))


def test_psi_a_is_the_identity_in_two_dimensions():
    x = np.linspace(0.0, 5.0, 11)
    np.testing.assert_array_equal(psi_a(x, 0.7, 2), x)
    np.testing.assert_allclose(psi_a_prime(x[1:], 0.7, 2), 1.0)


@pytest.mark.parametrize("dim", [3, 5])
def test_psi_a_is_increasing_from_zero(dim):
    x = np.linspace(0.0, 5.0, 501)
    values = psi_a(x, 0.08, dim)
    assert values[0] == 0.0
    assert np.all(np.diff(values) > 0)


def test_psi_one_at_one_in_four_dimensions():
    assert float(psi_a(1.0, 1.0, 4)) == pytest.approx(math.sqrt(2) - 1, rel=1e-12)


def test_psi_a_prime_matches_finite_differences():
    x = np.linspace(0.5, 4.0, 8)
    step = 1e-6
    numeric = (psi_a(x + step, 1.0, 3) - psi_a(x - step, 1.0, 3)) / (2 * step)
    np.testing.assert_allclose(psi_a_prime(x, 1.0, 3), numeric, rtol=1e-6)


def test_liebscher_recovers_the_gaussian_generator(gaussian2, rng):
    sigma = CorrMatrix.identity(2)
    z = sample_elliptical(EllipticalModel.centered(sigma, gaussian2), 5000, rng)

    estimate = liebscher_estimate(z, sigma, KernelConfig(a=1.0, h=0.1))
    truth = gaussian_generator(2, estimate.grid)

    assert np.all(estimate.values >= 0)
    assert l2_on(estimate.grid.nodes, estimate.values, truth.values, 0.2, 5.0) <= 0.02


def test_stute_werner_sets_the_boundary_to_zero_above_two_dimensions(gaussian3, sigma3, rng):
    z = sample_elliptical(EllipticalModel.centered(sigma3, gaussian3), 500, rng)

    with pytest.warns(BoundaryWarning):
        estimate = stute_werner_estimate(z, sigma3, h=0.2)

    below = estimate.grid.nodes < 0.2
    assert np.all(estimate.values[below] == 0.0)
    assert np.any(estimate.values[~below] > 0.0)


def test_stute_werner_has_no_boundary_in_two_dimensions(gaussian2, sigma2, rng):
    z = sample_elliptical(EllipticalModel.centered(sigma2, gaussian2), 500, rng)

    with warnings.catch_warnings():
        warnings.simplefilter("error", BoundaryWarning)
        estimate = stute_werner_estimate(z, sigma2, h=0.1)
    assert estimate.values[0] > 0.0


def test_estimators_reject_bad_input(gaussian2, sigma2, rng):
    z = sample_elliptical(EllipticalModel.centered(sigma2, gaussian2), 50, rng).values

    with pytest.raises(SingularSigmaError):
        liebscher_estimate(z, np.ones((2, 2)))
    with pytest.raises(OutOfDomainError):
        liebscher_estimate(z[:, :1], np.ones((1, 1)))
    with pytest.raises(ConfigurationError):
        liebscher_estimate(z[:1], sigma2)


def test_make_estimator_dispatches_on_kind():
    config = KernelConfig()
    assert isinstance(make_estimator(EstimatorKind.LIEBSCHER, config), LiebscherEstimator)
    assert isinstance(make_estimator("stute-werner", config), StuteWernerEstimator)


@pytest.mark.slow
def test_liebscher_estimate_of_the_normalized_gaussian_in_three_dimensions(gaussian3):
    rng = np.random.default_rng(2024)
    sigma = CorrMatrix.exchangeable(3, 0.2)
    z = sample_elliptical(EllipticalModel.centered(sigma, gaussian3), 100_000, rng)

    raw = liebscher_estimate(z, sigma, KernelConfig(a=1.0, h=0.1, grid=WIDE_GRID))
    estimate = normalize(raw, 1.0, grid=DEFAULT_GRID, tol_norm=1e-3)
    t = estimate.grid.nodes
    error = l2_on(t, estimate.values, np.exp(-math.pi * t), 0.1, 5.0)
    assert error <= 0.01
