"""Stationary states of the full-line and truncated problems.

The full-line stationary density is

    u_inf(x) = N_inf * exp(H(x)) * int_{max(0,x)}^inf exp(-H(y)) dy,

normalised to unit mass. It is evaluated through the right kernel
K(x) = exp(H(x)) int_x^inf exp(-H), so that u_inf = N_inf K(x) for x >= 0 and
u_inf = N_inf K(0) exp(H(x)) for x < 0; nothing is ever exponentiated to an
overflowing value.

The truncated stationary state (absorption at rate alpha_R on [R, inf),
drift frozen at h(R) there) is

    ubar_R(x) = Nbar_R * exp(H(x)) * ( exp(-H(R)) / (lambda_R + h(R))
                                       + int_{max(0,x)}^R exp(-H(y)) dy ),   x <= R
    ubar_R(x) = Nbar_R / (lambda_R + h(R)) * exp(-lambda_R (x - R)),          x >= R.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import RightKernel, adapted_faces, exp_H_integral
from ._quad import gl_integrate, gl_nodes
from .drift import DriftKind, DriftSpec, zeta
from .grid import ConfigurationError, DensityField, Grid

__all__ = [
    "SteadyStateProfile",
    "TruncatedSteadyState",
    "StationaryDensity",
    "TruncatedDensity",
    "compute_steady_state",
    "compute_truncated_steady_state",
    "truncated_lambda",
    "default_alpha",
    "default_truncated_grid",
    "tail_residual",
    "fisher_integral",
    "stationary_residual",
    "l1_distance",
]

_CELL_ORDER = 8


class StationaryDensity:
    """Pointwise u_inf with its exact derivative and interval masses."""

    def __init__(self, spec: DriftSpec, kernel: RightKernel | None = None):
        self.spec = spec
        self.kernel = kernel if kernel is not None else RightKernel(spec)
        self.k0 = float(self.kernel(np.array([0.0]))[0])
        self._left_exp = exp_H_integral(spec, -np.inf, 0.0)
        total = self.k0 * self._left_exp + self.kernel.integral(0.0, np.inf)
        self.n_inf = 1.0 / total
        self.kinks = (0.0,)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        neg = x < 0.0
        out[neg] = self.n_inf * self.k0 * np.exp(self.spec.H(x[neg]))
        out[~neg] = self.n_inf * self.kernel(x[~neg])
        return out

    def log(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        neg = x < 0.0
        out[neg] = math.log(self.n_inf * self.k0) + self.spec.H(x[neg])
        out[~neg] = math.log(self.n_inf) + np.log(self.kernel(x[~neg]))
        return out

    def derivative(self, x):
        """u' from the stationary relation h u - u' = N_inf 1_{x >= 0}."""
        x = np.asarray(x, dtype=float)
        return self.spec.h(x) * self(x) - self.n_inf * (x >= 0.0)

    def flux(self, x):
        return self.n_inf * (np.asarray(x, dtype=float) >= 0.0)

    def mass_between(self, a, b):
        total = 0.0
        if a < 0.0:
            total += self.n_inf * self.k0 * exp_H_integral(self.spec, a, min(b, 0.0))
        if b > 0.0:
            total += self.n_inf * self.kernel.integral(max(a, 0.0), b)
        return total

    @property
    def h1(self):
        return self.spec.h1

    @property
    def c_inf(self):
        """Prefactor of the Gaussian left tail u_inf = C exp(-x^2/2 + h0 x), x < x0."""
        return self.n_inf * self.k0 * math.exp(self.spec.h1)


class TruncatedDensity:
    """Pointwise ubar_R, sharing the right kernel of the full-line problem."""

    def __init__(self, spec: DriftSpec, R, alpha_R, kernel: RightKernel | None = None):
        self.spec = spec
        self.R = float(R)
        self.alpha_R = float(alpha_R)
        self.kernel = kernel if kernel is not None else RightKernel(spec)
        self.lambda_R = truncated_lambda(spec, R, alpha_R)
        self.h_R = float(spec.h(self.R))
        self.H_R = float(spec.H(self.R))
        self.k0 = float(self.kernel(np.array([0.0]))[0])
        k_R = float(self.kernel(np.array([self.R]))[0])
        # ubar_R(x) = Nbar (K(x) + corr * exp(H(x) - H(R))) on [0, R].
        self.corr = 1.0 / (self.lambda_R + self.h_R) - k_R
        self.kinks = (0.0, self.R)
        left = (self.k0 + math.exp(-self.H_R) * self.corr) * exp_H_integral(spec, -np.inf, 0.0)
        mid = self.kernel.integral(0.0, self.R) + self.corr * self._rel_exp_integral(0.0, self.R)
        right = 1.0 / (self.lambda_R * (self.lambda_R + self.h_R))
        self.nbar_R = 1.0 / (left + mid + right)

    def _rel_exp_integral(self, a, b):
        """int_a^b exp(H(x) - H(R)) dx for 0 <= a <= b <= R."""
        if b <= a:
            return 0.0
        faces = adapted_faces(self.spec, a, b)
        return float(np.sum(gl_integrate(lambda y: np.exp(self.spec.H(y) - self.H_R), faces[:-1], faces[1:])))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        neg = x < 0.0
        right = x > self.R
        mid = ~(neg | right)
        nb, H = self.nbar_R, self.spec.H
        out[neg] = nb * np.exp(H(x[neg])) * (self.k0 + math.exp(-self.H_R) * self.corr)
        xm = x[mid]
        out[mid] = nb * (self.kernel(xm) + self.corr * np.exp(H(xm) - self.H_R))
        out[right] = nb / (self.lambda_R + self.h_R) * np.exp(-self.lambda_R * (x[right] - self.R))
        return out

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        u = self(x)
        inner = self.spec.h(np.minimum(x, self.R)) * u - self.nbar_R * (x >= 0.0)
        return np.where(x > self.R, -self.lambda_R * u, inner)

    def flux(self, x):
        """h_R u - u', the probability flux of ubar_R."""
        x = np.asarray(x, dtype=float)
        u = self(x)
        return np.where(x > self.R, (self.h_R + self.lambda_R) * u, self.nbar_R * (x >= 0.0))

    def mass_between(self, a, b):
        total = 0.0
        nb = self.nbar_R
        if a < 0.0:
            total += nb * (self.k0 + math.exp(-self.H_R) * self.corr) * exp_H_integral(self.spec, a, min(b, 0.0))
        lo, hi = max(a, 0.0), min(b, self.R)
        if hi > lo:
            total += nb * (self.kernel.integral(lo, hi) + self.corr * self._rel_exp_integral(lo, hi))
        if b > self.R:
            lam = self.lambda_R
            lo = max(a, self.R)
            far = 0.0 if not np.isfinite(b) else math.exp(-lam * (b - self.R))
            total += nb / (self.lambda_R + self.h_R) * (math.exp(-lam * (lo - self.R)) - far) / lam
        return total


def _cell_averages(pdf, grid: Grid, kinks=()):
    """Exact-to-quadrature cell averages, splitting cells at kink points."""
    f = grid.faces
    x, w = gl_nodes(f[:-1], f[1:], _CELL_ORDER)
    avg = np.sum(pdf(x) * w, axis=-1)
    for k in kinks:
        i = int(np.searchsorted(f, k, side="right") - 1)
        if 0 <= i < grid.n_cells and f[i] < k < f[i + 1]:
            xs, ws = gl_nodes(np.array([f[i], k]), np.array([k, f[i + 1]]), _CELL_ORDER)
            avg[i] = float(np.sum(pdf(xs) * ws))
    return avg / grid.dx


@dataclass(frozen=True)
class SteadyStateProfile:
    """Grid-sampled stationary density.

    ``values`` are exact cell averages and ``point_values`` samples at the
    cell centres. ``left_tail_mass`` and ``right_tail_mass`` hold the mass
    outside the grid, so ``mass`` accounts for the whole line.
    """

    grid: Grid
    values: np.ndarray
    n_inf: float
    quadrature_tol: float
    point_values: np.ndarray = field(repr=False)
    density: object = field(repr=False)
    left_tail_mass: float = 0.0
    right_tail_mass: float = 0.0

    @property
    def mass(self):
        return float(np.sum(self.values) * self.grid.dx + self.left_tail_mass + self.right_tail_mass)

    @property
    def grid_mass(self):
        return float(np.sum(self.values) * self.grid.dx)

    def __call__(self, x):
        return self.density(x)

    def derivative(self, x):
        return self.density.derivative(x)

    def log_values(self):
        if hasattr(self.density, "log"):
            return self.density.log(self.grid.centers)
        return np.log(self.point_values)

    def discrete_field(self):
        """Centre samples renormalised to unit mass on the grid."""
        cells = self.point_values / (np.sum(self.point_values) * self.grid.dx)
        return DensityField(self.grid, cells)

    def average_field(self):
        """Cell averages renormalised to unit mass on the grid."""
        return DensityField(self.grid, self.values / self.grid_mass)


@dataclass(frozen=True)
class TruncatedSteadyState:
    profile: SteadyStateProfile
    R: float
    alpha_R: float
    lambda_R: float
    nbar_R: float

    @property
    def values(self):
        return self.profile.values

    @property
    def grid(self):
        return self.profile.grid


def _check_covers(spec, grid):
    if not (grid.x_min < spec.x0 and grid.x_max > spec.x1):
        raise ConfigurationError(
            f"grid [{grid.x_min}, {grid.x_max}] must cover [x0, x1] = [{spec.x0}, {spec.x1}] strictly"
        )


def _profile(density, grid, n, tol):
    values = _cell_averages(density, grid, density.kinks)
    points = density(grid.centers)
    left = density.mass_between(-np.inf, grid.x_min)
    right = density.mass_between(grid.x_max, np.inf)
    return SteadyStateProfile(grid, values, n, tol, points, density, left, right)


def compute_steady_state(spec: DriftSpec, grid: Grid) -> SteadyStateProfile:
    """Full-line stationary state u_inf sampled on ``grid``."""
    _check_covers(spec, grid)
    density = StationaryDensity(spec)
    # Second resolution of the kernel panels bounds the quadrature error on N_inf.
    coarse = StationaryDensity(spec, RightKernel(spec, max_dH=2.0))
    tol = abs(coarse.n_inf - density.n_inf) / density.n_inf
    return _profile(density, grid, density.n_inf, tol)


def truncated_lambda(spec: DriftSpec, R, alpha_R):
    """Decay rate of ubar_R beyond R: the positive root of l^2 + h(R) l - alpha_R."""
    if R <= spec.x1:
        raise ValueError(f"R must exceed x1 = {spec.x1}")
    if alpha_R <= 0.0:
        raise ValueError("alpha_R must be positive")
    hR = float(spec.h(R))
    # Cancellation-free form of (sqrt(hR^2 + 4 alpha) - hR) / 2.
    return 2.0 * alpha_R / (math.sqrt(hR * hR + 4.0 * alpha_R) + hR)


def default_alpha(spec: DriftSpec, R):
    """alpha_R = h(R)^(3/2): tends to infinity and is o(h(R)^2)."""
    if spec.kind is DriftKind.QUADRATIC and spec.right_branch.label == "quadratic":
        return float(R) ** 3
    return float(spec.h(R)) ** 1.5


def default_truncated_grid(spec: DriftSpec, R, alpha_R=None, dx=0.01, x_min=-8.0):
    alpha_R = default_alpha(spec, R) if alpha_R is None else alpha_R
    lam = truncated_lambda(spec, R, alpha_R)
    return Grid.from_bounds(x_min, R + 8.0 / lam, dx)


def compute_truncated_steady_state(spec: DriftSpec, R, alpha_R, grid: Grid) -> TruncatedSteadyState:
    """Stationary state ubar_R of the absorbed problem sampled on ``grid``."""
    if R <= spec.x1:
        raise ValueError(f"R must exceed x1 = {spec.x1}")
    _check_covers(spec, grid)
    if grid.x_max <= R:
        raise ConfigurationError("grid must extend beyond R")
    density = TruncatedDensity(spec, R, alpha_R)
    coarse = TruncatedDensity(spec, R, alpha_R, RightKernel(spec, max_dH=2.0))
    tol = abs(coarse.nbar_R - density.nbar_R) / density.nbar_R
    profile = _profile(density, grid, density.nbar_R, tol)
    if profile.right_tail_mass > 1e-6:
        raise ConfigurationError(
            f"mass {profile.right_tail_mass:.3g} beyond x_max; extend the grid past R + 8/lambda_R"
        )
    return TruncatedSteadyState(profile, float(R), float(alpha_R), density.lambda_R, density.nbar_R)


def tail_residual(profile: SteadyStateProfile, spec: DriftSpec, x_from):
    """sup over grid centres x >= x_from of |h(x) u(x) / N - 1|."""
    if x_from < spec.x1:
        raise ValueError("x_from must be >= x1")
    x = profile.grid.centers
    sel = x >= x_from
    if not np.any(sel):
        return 0.0
    r = spec.h(x[sel]) * profile.point_values[sel] / profile.n_inf - 1.0
    return float(np.max(np.abs(r)))


def fisher_integral(profile: SteadyStateProfile, spec: DriftSpec):
    """int (u')^2 / u over the grid, with u' from the stationary relation."""
    dens = profile.density

    def integrand(x):
        return dens.derivative(x) ** 2 / dens(x)

    return float(_cell_averages(integrand, profile.grid, dens.kinks).sum() * profile.grid.dx)


def stationary_residual(profile: SteadyStateProfile, x=None, delta=1e-3):
    """h u - u' - N 1_{x >= 0} with u' from fourth-order finite differences of
    the pointwise density (independent of the exact derivative).

    Stencils that would straddle a kink are replaced by one-sided ones taken
    on the side of the indicator convention (right derivative at 0).
    """
    dens = profile.density
    spec = dens.spec
    x = profile.grid.centers if x is None else np.asarray(x, dtype=float)
    d = (-dens(x + 2 * delta) + 8 * dens(x + delta) - 8 * dens(x - delta) + dens(x - 2 * delta)) / (12 * delta)
    for k in dens.kinks:
        near = np.abs(x - k) < 2.5 * delta
        if not np.any(near):
            continue
        xs = x[near]
        side = np.where(xs >= k, 1.0, -1.0)
        f = [dens(xs + side * j * delta) for j in range(5)]
        one_sided = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * delta)
        d[near] = side * one_sided
    return spec.h(x) * dens(x) - d - profile.n_inf * (x >= 0.0)


def l1_distance(a, b, grid: Grid, include_tails=True):
    """int |a - b| for two pointwise densities, over the grid and (optionally)
    over both tails, with cells split at the densities' kinks."""
    kinks = tuple(sorted(set(getattr(a, "kinks", ())) | set(getattr(b, "kinks", ()))))
    inside = float(_cell_averages(lambda x: np.abs(a(x) - b(x)), grid, kinks).sum() * grid.dx)
    if not include_tails:
        return inside
    # Outside the grid one density dominates the other on each side.
    left = abs(a.mass_between(-np.inf, grid.x_min) - b.mass_between(-np.inf, grid.x_min))
    right = abs(a.mass_between(grid.x_max, np.inf) - b.mass_between(grid.x_max, np.inf))
    return inside + left + right
