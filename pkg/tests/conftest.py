import math

import numpy as np
import pytest

from app.internal.ellipgen import (
    CorrMatrix,
    Generator,
    UniformGrid,
    gaussian_generator,
    normalize,
)


# wide grid: exp(-t/2) has no mass left beyond t = 40
WIDE_GRID = UniformGrid.span(0.0, 40.0, 0.02)
COARSE_GRID = UniformGrid.span(0.0, 10.0, 0.02)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def wide_grid() -> UniformGrid:
    return WIDE_GRID


@pytest.fixture
def coarse_grid() -> UniformGrid:
    return COARSE_GRID


@pytest.fixture
def gaussian2() -> Generator:
    return gaussian_generator(2, WIDE_GRID)


@pytest.fixture
def gaussian3() -> Generator:
    return gaussian_generator(3, WIDE_GRID)


@pytest.fixture
def exp_pi2():
    """exp(-pi t), the normalized Gaussian generator with b = 1, in d = 2."""
    return normalize(Generator.from_callable(lambda t: np.exp(-math.pi * t), 2, COARSE_GRID), 1.0, tol_norm=1e-3)


@pytest.fixture
def sigma2() -> CorrMatrix:
    return CorrMatrix.exchangeable(2, 0.2)


@pytest.fixture
def sigma3() -> CorrMatrix:
    return CorrMatrix.exchangeable(3, 0.2)
