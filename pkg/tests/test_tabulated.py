import math

import numpy as np
import pytest

from app.internal.ellipgen import (
    DEFAULT_GRID,
    ConfigurationError,
    GridMismatchError,
    TabulatedFunction,
    UniformGrid,
)
from app.internal.ellipgen.tabulated import check_same_grid


def test_default_grid_covers_zero_to_ten():
    assert DEFAULT_GRID.count == 2001
    assert DEFAULT_GRID.step == 0.005
    assert DEFAULT_GRID.stop == pytest.approx(10.0)
    assert DEFAULT_GRID.nodes[0] == 0.0


@pytest.mark.parametrize("step, count", [(0.0, 10), (-1.0, 10), (0.1, 1)])
def test_grid_rejects_bad_parameters(step, count):
    with pytest.raises(ConfigurationError):
        UniformGrid(start=0.0, step=step, count=count)


def test_grid_nodes_are_read_only():
    grid = UniformGrid.linspace(0.0, 1.0, 11)
    with pytest.raises(ValueError):
        grid.nodes[0] = 5.0


def test_scaled_grid_multiplies_every_node():
    grid = UniformGrid.linspace(1.0, 3.0, 5)
    np.testing.assert_allclose(grid.scaled(0.5).nodes, grid.nodes * 0.5)


def test_evaluation_contract():
    table = TabulatedFunction(UniformGrid.linspace(1.0, 3.0, 3), [2.0, 4.0, 8.0])
    assert table(2.5) == pytest.approx(6.0)
    assert table(0.0) == 2.0
    assert table(3.5) == 0.0
    assert table(3.5, above=1.0) == 1.0
    np.testing.assert_allclose(table(np.array([1.0, 1.5, 2.0])), [2.0, 3.0, 4.0])


def test_values_must_match_grid_and_be_finite():
    grid = UniformGrid.linspace(0.0, 1.0, 3)
    with pytest.raises(ConfigurationError):
        TabulatedFunction(grid, [1.0, 2.0])
    with pytest.raises(ConfigurationError):
        TabulatedFunction(grid, [1.0, math.nan, 2.0])


def test_integral_and_distances():
    grid = UniformGrid.linspace(0.0, 1.0, 101)
    line = TabulatedFunction.from_callable(lambda t: t, grid)
    zero = TabulatedFunction(grid, np.zeros(grid.count))

    assert line.integral() == pytest.approx(0.5)
    assert line.squared_error(zero) == pytest.approx(0.01 * np.sum(grid.nodes ** 2))
    assert line.l2_distance(zero) == pytest.approx(math.sqrt(line.squared_error(zero)))
    assert line.l2_distance(line) == 0.0


def test_distances_need_the_same_grid():
    first = TabulatedFunction(UniformGrid.linspace(0.0, 1.0, 3), [1.0, 1.0, 1.0])
    second = TabulatedFunction(UniformGrid.linspace(0.0, 2.0, 3), [1.0, 1.0, 1.0])
    with pytest.raises(GridMismatchError):
        first.l2_distance(second)
    with pytest.raises(GridMismatchError):
        check_same_grid(first.grid, second.grid)


def test_evaluation_interpolates_between_nodes():
    table = TabulatedFunction.from_callable(lambda t: 2 * t, UniformGrid.linspace(0.0, 1.0, 3))
    np.testing.assert_allclose(table(np.linspace(0.0, 1.0, 5)), [0.0, 0.5, 1.0, 1.5, 2.0])
