import numpy as np
import pytest

from app.internal.ellipgen import (
    ConfigurationError,
    CorrMatrix,
    DataInvariantError,
    DataMatrix,
    InfeasibleSigmaError,
    PseudoObs,
    SigmaKind,
    feasibility_bound,
    structured_corr,
)


def test_data_matrix_masks_missing_entries():
    x = DataMatrix.from_array([[1.0, np.nan], [2.0, 3.0], [4.0, 5.0]])
    assert x.n == 3
    assert x.d == 2
    assert x.has_missing
    np.testing.assert_array_equal(x.mask, [[False, True], [False, False], [False, False]])


def test_data_matrix_is_read_only():
    x = DataMatrix.from_array([[1.0, 2.0], [3.0, 4.0]])
    with pytest.raises(ValueError):
        x.values[0, 0] = 7.0


@pytest.mark.parametrize(
    "values",
    [
        [[np.nan, np.nan], [1.0, 2.0], [3.0, 4.0]],
        [[1.0, np.nan], [2.0, np.nan], [3.0, 4.0]],
        [[1.0, np.inf], [2.0, 3.0]],
        [1.0, 2.0],
    ],
)
def test_data_matrix_invariants(values):
    with pytest.raises(DataInvariantError):
        DataMatrix.from_array(values)


def test_empty_data_matrix_keeps_its_width():
    empty = DataMatrix.empty(3)
    assert (empty.n, empty.d) == (0, 3)


def test_pseudo_observations_must_lie_in_the_open_unit_interval():
    PseudoObs.from_array([[0.2, np.nan], [0.4, 0.6]])
    with pytest.raises(DataInvariantError):
        PseudoObs.from_array([[0.0, 0.5], [0.4, 0.6]])


def test_pseudo_observations_complete_rows():
    u = PseudoObs.from_array([[0.2, np.nan], [0.4, 0.6], [0.8, 0.1]])
    np.testing.assert_array_equal(u.complete_rows(), [[0.4, 0.6], [0.8, 0.1]])


@pytest.mark.parametrize(
    "values",
    [
        [[1.0, 0.5], [0.4, 1.0]],
        [[1.0, 0.5], [0.5, 0.9]],
        [[1.0, 1.0], [1.0, 1.0]],
        [[1.0, 0.5, 0.0], [0.5, 1.0, 0.0]],
    ],
)
def test_corr_matrix_invariants(values):
    with pytest.raises(ConfigurationError):
        CorrMatrix(np.array(values))


def test_exchangeable_and_identity():
    sigma = CorrMatrix.exchangeable(3, 0.2)
    assert sigma.values[0, 2] == 0.2
    assert sigma.min_eigenvalue == pytest.approx(0.8)
    np.testing.assert_array_equal(CorrMatrix.identity(2).values, np.eye(2))


def test_structured_matrices_place_rho12_in_the_leading_block():
    sigma3 = structured_corr(SigmaKind.SIGMA3, 0.5)
    np.testing.assert_allclose(sigma3.values, [[1.0, 0.5, 0.2], [0.5, 1.0, 0.2], [0.2, 0.2, 1.0]])

    sigma10 = structured_corr(SigmaKind.SIGMA10, 0.5)
    assert sigma10.d == 10
    assert sigma10.values[1, 2] == 0.5
    assert sigma10.values[0, 3] == 0.2
    assert sigma10.values[4, 9] == 0.2


def test_feasibility_bounds():
    assert feasibility_bound(SigmaKind.EXCHANGEABLE, 3) == pytest.approx(-0.5)
    assert feasibility_bound(SigmaKind.SIGMA3) == pytest.approx(-0.92, abs=1e-9)
    # smallest-eigenvalue root of the literal layout; commonly quoted as -0.432
    assert feasibility_bound(SigmaKind.SIGMA10) == pytest.approx(-0.3091, abs=1e-3)


@pytest.mark.parametrize(
    "kind, rho, dim",
    [
        (SigmaKind.SIGMA3, -0.95, None),
        (SigmaKind.SIGMA10, -0.35, None),
        (SigmaKind.EXCHANGEABLE, -0.6, 3),
        (SigmaKind.EXCHANGEABLE, 1.0, 2),
    ],
)
def test_infeasible_structures_are_rejected(kind, rho, dim):
    with pytest.raises(InfeasibleSigmaError):
        structured_corr(kind, rho, dim)


def test_exchangeable_structure_needs_a_dimension():
    with pytest.raises(ConfigurationError):
        structured_corr(SigmaKind.EXCHANGEABLE, 0.2)
