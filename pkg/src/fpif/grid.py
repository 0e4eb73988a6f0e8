"""Uniform cell grid and cell-valued densities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ConfigurationError(ValueError):
    """Raised when a grid, truncation or run configuration is inconsistent."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid whose cell centres are integer multiples of ``dx``.

    Use :meth:`from_bounds`: the requested bounds are widened by less than one
    cell so that x = 0 is a cell centre (the reinjection cell).
    """

    x_min: float
    x_max: float
    n_cells: int
    dx: float
    index_of_zero: int

    @classmethod
    def from_bounds(cls, x_min, x_max, dx=0.01):
        if not (x_min < 0.0 < x_max):
            raise ConfigurationError(f"grid must straddle 0, got [{x_min}, {x_max}]")
        if dx <= 0.0:
            raise ConfigurationError("dx must be positive")
        n_left = int(math.ceil(-x_min / dx - 0.5 - 1e-9))
        n_right = int(math.ceil(x_max / dx - 0.5 - 1e-9))
        n = n_left + 1 + n_right
        return cls(-(n_left + 0.5) * dx, (n_right + 0.5) * dx, n, float(dx), n_left)

    @property
    def centers(self):
        return (np.arange(self.n_cells) - self.index_of_zero) * self.dx

    @property
    def faces(self):
        return (np.arange(self.n_cells + 1) - self.index_of_zero - 0.5) * self.dx

    def index_at(self, x):
        """Index of the cell containing ``x`` (clipped to the grid)."""
        i = np.floor((np.asarray(x, dtype=float) - self.x_min) / self.dx).astype(int)
        return np.clip(i, 0, self.n_cells - 1)

    def refined(self, factor=2):
        return Grid.from_bounds(self.x_min + 0.5 * self.dx, self.x_max - 0.5 * self.dx, self.dx / factor)

    def same_as(self, other):
        return self.n_cells == other.n_cells and self.index_of_zero == other.index_of_zero and self.dx == other.dx

    def to_dict(self):
        return {"x_min": self.x_min, "x_max": self.x_max, "dx": self.dx}


@dataclass
class DensityField:
    """Cell values of a density on ``grid`` at time ``time``."""

    grid: Grid
    cells: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=float)
        if self.cells.shape != (self.grid.n_cells,):
            raise ValueError(f"expected {self.grid.n_cells} cells, got {self.cells.shape}")

    @property
    def mass(self):
        return float(np.sum(self.cells) * self.grid.dx)

    def copy(self):
        return DensityField(self.grid, self.cells.copy(), self.time)

    @classmethod
    def gaussian(cls, grid, center, sigma):
        """Normalised Gaussian bump (cell averages, renormalised on the grid)."""
        from scipy.special import ndtr

        f = grid.faces
        cdf = ndtr((f - center) / sigma)
        cells = np.diff(cdf) / grid.dx
        return cls(grid, cells / (np.sum(cells) * grid.dx))

    @classmethod
    def point_mass(cls, grid, x=0.0):
        cells = np.zeros(grid.n_cells)
        cells[grid.index_at(x)] = 1.0 / grid.dx
        return cls(grid, cells)


def check_probability(field, tol=1e-8):
    if np.any(field.cells < 0.0) or not np.all(np.isfinite(field.cells)):
        raise ValueError("density must be finite and nonnegative")
    if abs(field.mass - 1.0) > tol:
        raise ValueError(f"density must have unit mass, got {field.mass:.12g}")
