import numpy as np
import pytest
from scipy import stats

from app.internal.ellipgen import (
    CorrMatrix,
    DataMatrix,
    DegenerateColumnError,
    InsufficientPairsError,
    OutOfDomainError,
    copula_density,
    corr_from_tau,
    kendall_tau_matrix,
    project_psd,
    pseudo_observations,
    sample_meta_elliptical,
    scale_generator,
)
from app.internal.ellipgen import copula
from app.internal.ellipgen.copula import _tau_by_merge_sort, _tau_by_pairs, kendall_tau


def test_pseudo_observations_are_scaled_ranks():
    x = DataMatrix.from_array([[3.0, 1.0], [1.0, 2.0], [2.0, 3.0]])
    u = pseudo_observations(x)
    np.testing.assert_allclose(u.values[:, 0], [0.75, 0.25, 0.5])
    np.testing.assert_allclose(u.values[:, 1], [0.25, 0.5, 0.75])


def test_pseudo_observations_average_ties_and_keep_missing():
    x = DataMatrix.from_array([[1.0, 5.0], [1.0, np.nan], [2.0, 4.0], [3.0, 6.0]])
    u = pseudo_observations(x)

    np.testing.assert_allclose(u.values[:, 0], [0.3, 0.3, 0.6, 0.8])
    np.testing.assert_array_equal(u.mask, x.mask)
    # the second column ranks its three observed entries over n_j + 1 = 4
    np.testing.assert_allclose(u.values[[0, 2, 3], 1], [0.5, 0.25, 0.75])


def test_pseudo_observations_are_invariant_under_monotone_maps(rng):
    x = rng.standard_normal((50, 3))
    transformed = np.column_stack([np.exp(x[:, 0]), x[:, 1] ** 3, 2 * x[:, 2] + 7])

    np.testing.assert_array_equal(
        pseudo_observations(DataMatrix.from_array(x)).values,
        pseudo_observations(DataMatrix.from_array(transformed)).values,
    )


def test_constant_column_is_degenerate():
    x = DataMatrix.from_array([[1.0, 2.0], [1.0, 3.0], [1.0, 4.0]])
    with pytest.raises(DegenerateColumnError) as info:
        pseudo_observations(x)
    assert info.value.column == 0


def test_kendall_tau_scores_ties_as_zero():
    assert kendall_tau([1, 2, 3], [4, 5, 6]) == pytest.approx(1.0)
    assert kendall_tau([1, 2, 3], [6, 5, 4]) == pytest.approx(-1.0)
    assert kendall_tau([1, 2, 3], [1, 1, 2]) == pytest.approx(2 / 3)


def test_kendall_tau_strategies_agree(rng):
    x = rng.integers(0, 20, 300).astype(float)
    y = x + rng.integers(0, 5, 300)
    assert _tau_by_merge_sort(x, y) == pytest.approx(_tau_by_pairs(x, y), abs=1e-12)


def test_kendall_tau_matches_scipy_without_ties(rng):
    x = rng.standard_normal(200)
    y = x + rng.standard_normal(200)
    assert kendall_tau(x, y) == pytest.approx(stats.kendalltau(x, y).statistic, abs=1e-12)


def test_tau_matrix_uses_pairwise_complete_rows():
    x = DataMatrix.from_array(
        [[1.0, 2.0, np.nan], [2.0, 1.0, 1.0], [3.0, 4.0, 2.0], [4.0, 3.0, 3.0], [np.nan, 5.0, 4.0]]
    )
    tau = kendall_tau_matrix(x)
    np.testing.assert_array_equal(np.diag(tau), 1.0)
    np.testing.assert_array_equal(tau, tau.T)
    assert tau[0, 2] == pytest.approx(1.0)
    assert tau[0, 1] == pytest.approx(kendall_tau([1, 2, 3, 4], [2, 1, 4, 3]))
    assert kendall_tau_matrix(pseudo_observations(x)) == pytest.approx(tau)


def test_tau_matrix_needs_two_shared_rows():
    x = DataMatrix.from_array([[1.0, np.nan], [2.0, np.nan], [np.nan, 1.0], [np.nan, 2.0]])
    with pytest.raises(InsufficientPairsError) as info:
        kendall_tau_matrix(x)
    assert info.value.columns == (0, 1)


def test_corr_from_tau_applies_the_sine_map():
    sigma = corr_from_tau([[1.0, 1 / 3], [1 / 3, 1.0]])
    assert sigma.values[0, 1] == pytest.approx(0.5)


def test_corr_from_tau_projects_indefinite_estimates():
    tau = np.array([[1.0, 0.8, -0.8], [0.8, 1.0, 0.8], [-0.8, 0.8, 1.0]])
    sigma = corr_from_tau(tau)
    assert sigma.min_eigenvalue >= 1e-6 - 1e-10
    np.testing.assert_allclose(np.diag(sigma.values), 1.0)


def test_project_psd_returns_valid_matrices_unchanged():
    valid = CorrMatrix.exchangeable(3, 0.2).values
    np.testing.assert_array_equal(project_psd(valid).values, valid)


def test_project_psd_is_idempotent():
    m = np.array([[1.0, 0.9, -0.9], [0.9, 1.0, 0.9], [-0.9, 0.9, 1.0]])
    projected = project_psd(m)

    assert projected.min_eigenvalue >= 1e-6 - 1e-10
    np.testing.assert_allclose(np.diag(projected.values), 1.0)
    assert np.all(np.abs(projected.values) <= 1.0)
    np.testing.assert_allclose(project_psd(projected.values).values, projected.values, atol=1e-6)


def test_gaussian_copula_density_in_closed_form(gaussian2, rng):
    sigma = CorrMatrix.exchangeable(2, 0.5)
    u = rng.uniform(0.05, 0.95, size=(20, 2))

    z = stats.norm.ppf(u)
    expected = stats.multivariate_normal(cov=sigma.values).pdf(z) / np.prod(stats.norm.pdf(z), axis=1)
    np.testing.assert_allclose(copula_density(gaussian2, sigma, u), expected, rtol=1e-3)


@pytest.mark.parametrize("a", [0.5, 2.0])
def test_copula_density_is_invariant_within_the_scale_family(gaussian2, rng, a):
    sigma = CorrMatrix.exchangeable(2, 0.3)
    u = rng.uniform(0.05, 0.95, size=(100, 2))

    reference = copula_density(gaussian2, sigma, u)
    scaled = copula_density(scale_generator(gaussian2, a), sigma, u)
    assert np.max(np.abs(scaled - reference)) <= 1e-3


def test_copula_density_of_a_single_point_is_a_float(gaussian2, sigma2):
    assert isinstance(copula_density(gaussian2, sigma2, [0.5, 0.5]), float)


@pytest.mark.parametrize("point", [[0.0, 0.5], [0.5, 1.0], [0.2, 0.3, 0.4]])
def test_copula_density_rejects_points_off_the_open_cube(gaussian2, sigma2, point):
    with pytest.raises(OutOfDomainError):
        copula_density(gaussian2, sigma2, point)


def test_meta_elliptical_sample_has_uniform_margins(gaussian2, rng):
    sigma = CorrMatrix.exchangeable(2, 0.5)
    u = sample_meta_elliptical(gaussian2, sigma, 2000, rng).values

    assert np.all((u > 0) & (u < 1))
    for column in u.T:
        assert stats.kstest(column, "uniform").pvalue > 1e-3
    # tau of an elliptical copula is 2 arcsin(rho) / pi
    assert kendall_tau(u[:, 0], u[:, 1]) == pytest.approx(1 / 3, abs=0.05)


def test_meta_elliptical_sample_applies_margins(gaussian2, sigma2):
    margins = [stats.expon(), None]
    first = sample_meta_elliptical(gaussian2, sigma2, 500, np.random.default_rng(9), margins=margins)
    second = sample_meta_elliptical(gaussian2, sigma2, 500, np.random.default_rng(9))

    np.testing.assert_allclose(first.values[:, 0], stats.expon.ppf(second.values[:, 0]))
    np.testing.assert_array_equal(first.values[:, 1], second.values[:, 1])


def test_meta_elliptical_sample_of_size_zero(gaussian2, sigma2, rng):
    assert sample_meta_elliptical(gaussian2, sigma2, 0, rng).n == 0


def test_copula_density_integrates_to_one(gaussian2, sigma2):
    u = np.random.default_rng(41).random((20_000, 2))
    assert float(np.mean(copula_density(gaussian2, sigma2, u))) == pytest.approx(1.0, abs=0.02)


def test_saturated_cdf_values_stay_inside_the_unit_interval(monkeypatch, gaussian2, sigma2, rng):
    class Saturated:
        def cumulative(self, x):
            return np.where(np.asarray(x) > 0, 1.0, 0.0)

    monkeypatch.setattr(copula, "_marginal_of", lambda g: Saturated())
    x = sample_meta_elliptical(gaussian2, sigma2, 50, rng, margins=[stats.norm(), None])

    assert np.all(np.isfinite(x.values))
    assert np.all((x.values[:, 1] > 0) & (x.values[:, 1] < 1))
