"""
Tabulated univariate functions on uniform grids.

Every generator, density and cdf in the library is carried as a
TabulatedFunction: values on the nodes of a UniformGrid, piecewise-linear
in between, equal to the first value below the grid and to 0 above it.
"""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

from typing_extensions import Self

import numpy as np
from scipy.integrate import trapezoid

from .exceptions import ConfigurationError, GridMismatchError


@dataclass(frozen=True)
class UniformGrid:
    """
    Uniform lattice start + k * step, k = 0..count-1.

    Attributes:
        start: First node.
        step: Spacing between consecutive nodes.
        count: Number of nodes.
    """
    start: float
    step: float
    count: int

    def __post_init__(self: Self) -> None:
        if not self.step > 0:
            raise ConfigurationError(f"Grid step must be positive, got {self.step}")
        if self.count < 2:
            raise ConfigurationError(f"Grid needs at least two nodes, got {self.count}")

    @classmethod
    def span(cls, start: float, stop: float, step: float) -> "UniformGrid":
        """
        Grid covering [start, stop] with the given step.

        The last node is the first one reaching stop (up to rounding).
        """
        count = int(math.ceil((stop - start) / step - 1e-9)) + 1
        return cls(start=float(start), step=float(step), count=max(count, 2))

    @classmethod
    def linspace(cls, start: float, stop: float, count: int) -> "UniformGrid":
        """Grid with exactly count nodes from start to stop."""
        return cls(start=float(start), step=(stop - start) / (count - 1), count=int(count))

    @property
    def stop(self: Self) -> float:
        """Last node."""
        return self.start + (self.count - 1) * self.step

    @cached_property
    def nodes(self: Self) -> np.ndarray:
        nodes = self.start + self.step * np.arange(self.count, dtype=float)
        nodes.setflags(write=False)
        return nodes

    def scaled(self: Self, factor: float) -> "UniformGrid":
        """Grid whose node k is factor times node k of this grid."""
        return UniformGrid(start=self.start * factor, step=self.step * factor, count=self.count)


DEFAULT_GRID = UniformGrid.span(0.0, 10.0, 0.005)


@dataclass(frozen=True, eq=False)
class TabulatedFunction:
    """
    A univariate function stored on a uniform grid.

    Attributes:
        grid: Nodes the values live on.
        values: One finite value per node (stored read-only).
    """
    grid: UniformGrid
    values: np.ndarray

    def __post_init__(self: Self) -> None:
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.count,):
            raise ConfigurationError(
                f"Expected {self.grid.count} values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ConfigurationError("Tabulated values must be finite")

        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, func, grid: UniformGrid) -> "TabulatedFunction":
        """Tabulate a vectorized callable on the nodes of grid."""
        return cls(grid=grid, values=np.asarray(func(grid.nodes), dtype=float))

    @property
    def nodes(self: Self) -> np.ndarray:
        return self.grid.nodes

    def __call__(self: Self, x, above: float = 0.0):
        """
        Evaluate by linear interpolation.

        Args:
            x: Scalar or array of arguments.
            above: Value returned beyond the last node.

        Returns:
            Interpolated value(s), same shape as x.
        """
        result = np.interp(x, self.grid.nodes, self.values, left=self.values[0], right=above)
        if np.ndim(result) == 0:
            return float(result)
        return result

    def integral(self: Self) -> float:
        """Trapezoid integral over the grid."""
        return float(trapezoid(self.values, dx=self.grid.step))

    def l2_distance(self: Self, other: "TabulatedFunction") -> float:
        """sqrt(step * sum of squared nodewise differences) on a shared grid."""
        return math.sqrt(self.squared_error(other))

    def squared_error(self: Self, other: "TabulatedFunction") -> float:
        """step * sum of squared nodewise differences on a shared grid."""
        check_same_grid(self.grid, other.grid)
        return float(self.grid.step * np.sum((self.values - other.values) ** 2))


def check_same_grid(first: UniformGrid, second: UniformGrid, rtol: Optional[float] = 1e-12) -> None:
    """
    Ensure two grids describe the same nodes.

    Raises:
        GridMismatchError: If the node sets differ.
    """
    if first.count != second.count or not (
        math.isclose(first.start, second.start, rel_tol=rtol, abs_tol=1e-12)
        and math.isclose(first.step, second.step, rel_tol=rtol)
    ):
        raise GridMismatchError(f"Grid mismatch: {first} vs {second}")
