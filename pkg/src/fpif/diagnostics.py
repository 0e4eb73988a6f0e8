"""Functionals used to certify solver output: relative entropies, the weighted
E-norm, exponential rate fits, the phi-identity for the integrated firing
rate, flux probes and the Muckenhoupt constant."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ._kernels import LeftKernel, adapted_faces
from ._quad import gl_integrate, gl_nodes
from .drift import DriftSpec, poincare_condition_sup, zeta
from .grid import DensityField, Grid
from .solver import EvolutionTrace
from .steady_state import SteadyStateProfile

__all__ = [
    "EntropyKind",
    "EntropySeries",
    "RateFit",
    "PhiProfile",
    "PoincareEstimate",
    "relative_entropy",
    "entropy_series",
    "weighted_e_norm",
    "e_norm_series",
    "annotate_trace",
    "fit_exponential_rate",
    "compute_phi",
    "phi_ode_residual",
    "phi_identity_residual",
    "boundary_flux_check",
    "stationary_flux_check",
    "boundary_average",
    "poincare_rate",
]


class EntropyKind(str, enum.Enum):
    SQUARE = "Square"
    ABS = "Abs"
    POSITIVE = "Positive"


def _entropy_fn(kind, c0):
    kind = EntropyKind(kind)
    if kind is EntropyKind.SQUARE:
        return lambda z: (z - 1.0) ** 2
    if kind is EntropyKind.ABS:
        return lambda z: np.abs(z - 1.0)
    return lambda z: np.maximum(0.0, np.abs(z) - c0)


def _reference(ref):
    """Cell values of a reference state and its mass outside the grid."""
    if isinstance(ref, SteadyStateProfile):
        return ref.grid, ref.values, ref.left_tail_mass, ref.right_tail_mass
    return ref.grid, ref.cells, 0.0, 0.0


def relative_entropy(u: DensityField, ref, h_kind="Square", c0=1.0):
    """sum_i H(u_i / r_i) r_i dx.

    ``ref`` is a ``SteadyStateProfile`` (cell averages of u_inf, whose mass
    outside the grid enters with H(0) since u vanishes there) or a
    ``DensityField`` such as the solver's discrete equilibrium.
    """
    grid, r, left, right = _reference(ref)
    if not u.grid.same_as(grid):
        raise ValueError("density and reference live on different grids")
    if np.any(r <= 0.0):
        raise ValueError("reference must be strictly positive on the grid")
    H = _entropy_fn(h_kind, c0)
    inside = float(np.sum(H(u.cells / r) * r) * grid.dx)
    return inside + float(H(np.float64(0.0))) * (left + right)


@dataclass(frozen=True)
class EntropySeries:
    times: np.ndarray
    values: np.ndarray
    h_kind: EntropyKind

    def increments(self):
        return np.diff(self.values)

    def violations(self, rel_tol=1e-8):
        """Indices where the series rises by more than rel_tol * values[0]."""
        return np.nonzero(self.increments() > rel_tol * self.values[0])[0] + 1

    def monotone(self, rel_tol=1e-8):
        return self.violations(rel_tol).size == 0


def entropy_series(trace: EvolutionTrace, ref, h_kind="Square", c0=1.0) -> EntropySeries:
    ts = trace.snapshot_times
    vals = np.array([relative_entropy(trace.snapshots[t], ref, h_kind, c0) for t in ts])
    return EntropySeries(ts, vals, EntropyKind(h_kind))


def weighted_e_norm(u: DensityField, v):
    """||(1 + (-x)_+)(u - v)||_1 on the grid.

    ``v`` may be a ``SteadyStateProfile``; its mass outside the grid is added
    with weight 1 on the right and at least 1 - x_min on the left.
    """
    grid, r, left, right = _reference(v)
    if not u.grid.same_as(grid):
        raise ValueError("densities live on different grids")
    w = 1.0 + np.maximum(0.0, -grid.centers)
    return float(np.sum(w * np.abs(u.cells - r)) * grid.dx) + right + (1.0 - grid.x_min) * left


def e_norm_series(trace: EvolutionTrace, ref):
    ts = trace.snapshot_times
    return ts, np.array([weighted_e_norm(trace.snapshots[t], ref) for t in ts])


def annotate_trace(trace: EvolutionTrace, ref, h_kind="Square"):
    """Fill ``entropy_series`` and ``e_norm_series`` of a trace in place,
    one entry per snapshot."""
    trace.entropy_series = entropy_series(trace, ref, h_kind).values
    trace.e_norm_series = e_norm_series(trace, ref)[1]
    return trace


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit value ~ m_hat * exp(-lambda_hat t) on ``window``."""

    lambda_hat: float
    m_hat: float
    r_squared: float
    window: tuple
    n_samples: int

    @property
    def accepted(self):
        return self.r_squared >= 0.9

    def predict(self, t):
        return self.m_hat * np.exp(-self.lambda_hat * np.asarray(t, dtype=float))

    def to_dict(self):
        return {
            "lambda": self.lambda_hat,
            "M": self.m_hat,
            "r2": self.r_squared,
            "window": list(self.window),
            "n_samples": self.n_samples,
            "accepted": self.accepted,
        }


def fit_exponential_rate(times, values, window=None, min_samples=10) -> RateFit:
    """Fit log(values) linearly in time.

    The default window is [t_end / 4, t_end]. Fits with r^2 < 0.9 are
    returned with ``accepted`` false rather than raised.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if window is None:
        window = (t[-1] / 4.0, t[-1])
    lo, hi = window
    sel = (t >= lo) & (t <= hi)
    if sel.sum() < min_samples:
        raise ValueError(f"window {window} holds {sel.sum()} samples, need {min_samples}")
    if np.any(v[sel] <= 0.0):
        raise ValueError("series must be positive on the fit window")
    fit = stats.linregress(t[sel], np.log(v[sel]))
    r2 = min(1.0, max(0.0, fit.rvalue**2))
    return RateFit(-fit.slope, math.exp(fit.intercept), r2, (float(lo), float(hi)), int(sel.sum()))


@dataclass(frozen=True)
class PhiProfile:
    """phi(x) = int_0^x P with P(y) = exp(-H(y)) int_-inf^y exp(H).

    ``values`` holds phi at the grid centres and ``c_phi`` its limit at
    +infinity, whose asymptotic remainder is bounded by ``c_phi_error``.
    """

    grid: Grid
    values: np.ndarray
    c_phi: float
    c_phi_error: float
    kernel: LeftKernel

    def derivative(self, x):
        return self.kernel(np.asarray(x, dtype=float))

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        for i, xi in enumerate(x):
            lo, hi = min(0.0, xi), max(0.0, xi)
            faces = np.linspace(lo, hi, max(1, int(math.ceil((hi - lo) / 0.05))) + 1)
            val = float(np.sum(gl_integrate(self.kernel, faces[:-1], faces[1:])))
            out[i] = val if xi >= 0.0 else -val
        return out


def compute_phi(spec: DriftSpec, grid: Grid) -> PhiProfile:
    kernel = LeftKernel(spec)
    faces = grid.faces
    x = grid.centers
    # Integrals of P over the half cells [x_i, x_{i+1/2}] and [x_{i-1/2}, x_i].
    right_half = gl_integrate(kernel, x, faces[1:])
    left_half = gl_integrate(kernel, faces[:-1], x)
    step = right_half[:-1] + left_half[1:]
    iz = grid.index_of_zero
    phi = np.zeros(grid.n_cells)
    phi[iz + 1:] = np.cumsum(step[iz:])
    phi[:iz] = -np.cumsum(step[:iz][::-1])[::-1]
    xt = kernel.x_tail
    pan = adapted_faces(spec, 0.0, xt)
    c_phi = float(np.sum(gl_integrate(kernel, pan[:-1], pan[1:]))) + kernel.tail_integral(xt)
    # Next term of the tail expansion bounds the truncation of the series.
    err = abs(float(spec.dh(xt)) / float(spec.h(xt)) ** 4)
    return PhiProfile(grid, phi, c_phi, err, kernel)


def phi_ode_residual(phi: PhiProfile, x, delta=1e-2):
    """phi'' + h phi' - 1 with both derivatives from fourth-order central
    differences of phi itself."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    spec = phi.kernel.spec
    out = np.empty_like(x)
    for i, xi in enumerate(x):
        base = float(phi(xi)[0])
        # Offsets integrated from xi keep the stencil free of cancellation.
        offs = np.array([-2.0, -1.0, 1.0, 2.0]) * delta
        inc = np.array([float(np.sum(gl_integrate(phi.kernel, *sorted((xi, xi + o))))) * np.sign(o) for o in offs])
        fm2, fm1, fp1, fp2 = base + inc
        d1 = (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * delta)
        d2 = (-fp2 + 16 * fp1 - 30 * base + 16 * fm1 - fm2) / (12 * delta**2)
        out[i] = d2 + float(spec.h(xi)) * d1 - 1.0
    return out


def phi_identity_residual(trace: EvolutionTrace, phi: PhiProfile):
    """Relative defect of int_0^t N = (t + I(0) - I(t)) / c_phi, I = int phi u,
    at every snapshot time. Returns (times, residual)."""
    ts = trace.snapshot_times
    if ts.size == 0:
        raise ValueError("trace has no snapshots")
    cum_all = trace.cumulative_rate()
    idx = np.searchsorted(trace.times, ts - 0.5 * trace.dt)
    if np.any(np.abs(trace.times[idx] - ts) > 0.5 * trace.dt):
        raise ValueError("snapshot times are not on the step grid")
    dx = phi.grid.dx
    I = np.array([np.dot(phi.values, trace.snapshots[t].cells) * dx for t in ts])
    cum = cum_all[idx]
    res = np.abs(cum - (ts + I[0] - I) / phi.c_phi) / (1.0 + cum)
    return ts, res


def _sample(u: DensityField, p):
    return float(np.interp(p, u.grid.centers, u.cells))


def boundary_flux_check(trace: EvolutionTrace, spec: DriftSpec, probes):
    """h(p) u(t, p) against N_R(t) at every snapshot, per probe p < R.

    Returns a list of rows {probe, h_u, rate, mean_rel_discrepancy}; the
    discrepancy is the time average of |h u - N_R| over the time average of
    N_R.
    """
    probes = np.atleast_1d(np.asarray(probes, dtype=float))
    if np.any(probes >= trace.R):
        raise ValueError("probes must lie below R")
    ts = trace.snapshot_times
    idx = np.searchsorted(trace.times, ts - 0.5 * trace.dt)
    rate = trace.firing_rate[idx]
    rows = []
    for p in probes:
        hu = np.array([float(spec.h(p)) * _sample(trace.snapshots[t], p) for t in ts])
        scale = float(np.mean(rate))
        disc = float(np.mean(np.abs(hu - rate)))
        rows.append({"probe": float(p), "h_u": hu, "rate": rate,
                     "mean_rel_discrepancy": disc / scale if scale > 0.0 else disc})
    return rows


def stationary_flux_check(profile: SteadyStateProfile, spec: DriftSpec, probes):
    """|h(p) u(p) - N| / N against the bound zeta(p) for a stationary profile."""
    rows = []
    for p in np.atleast_1d(np.asarray(probes, dtype=float)):
        val = float(spec.h(p)) * float(profile.density(np.array([p]))[0])
        rel = abs(val - profile.n_inf) / profile.n_inf
        bound = float(zeta(spec, p))
        rows.append({"probe": float(p), "h_u": val, "rel_discrepancy": rel, "zeta": bound, "ok": rel <= bound})
    return rows


def boundary_average(u: DensityField, ref, probe, width=1.0):
    """Mean of w = u / ref over [probe, probe + width], the finite-probe
    stand-in for the boundary term of the jump dissipation."""
    grid, r, _, _ = _reference(ref)
    x = grid.centers
    sel = (x >= probe) & (x < probe + width)
    if not np.any(sel):
        raise ValueError("probe window misses the grid")
    return float(np.mean(u.cells[sel] / r[sel]))


@dataclass(frozen=True)
class PoincareEstimate:
    applicable: bool
    k: float
    mu_lower: float
    sup_value: float

    def to_dict(self):
        return {"applicable": self.applicable, "k": self.k, "mu_lower": self.mu_lower, "sup_value": self.sup_value}


def poincare_rate(profile: SteadyStateProfile, spec: DriftSpec) -> PoincareEstimate:
    """k = sup (1 - U) U / u_inf with U(x) = int_x^inf u_inf, mu_lower = 1/(4k).

    The sup runs over the grid faces; k is reported even when the drift
    fails the Poincare condition, in which case mu_lower is 0.
    """
    cond = poincare_condition_sup(spec)
    grid = profile.grid
    dens = profile.density
    faces = grid.faces
    # Cell masses from the pointwise density, so U does not depend on the
    # normalisation of the stored cell averages.
    x, w = gl_nodes(faces[:-1], faces[1:], 8)
    cell = np.sum(dens(x) * w, axis=-1)
    # Accumulate both tails separately so 1 - U never suffers cancellation.
    U = np.empty(faces.size)
    U[-1] = profile.right_tail_mass
    U[:-1] = U[-1] + np.cumsum(cell[::-1])[::-1]
    below = np.empty(faces.size)
    below[0] = profile.left_tail_mass
    below[1:] = below[0] + np.cumsum(cell)
    ratio = below * U / dens(faces)
    k = float(np.max(ratio))
    applicable = bool(cond["bounded"])
    mu = 1.0 / (4.0 * k) if applicable else 0.0
    return PoincareEstimate(applicable, k, mu, float(cond["sup_value"]))
