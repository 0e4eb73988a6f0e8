import numpy as np
import pytest

from fpif import DensityField, Grid, build_operator, compute_steady_state, evolve, make_canonical_drift
from fpif.diagnostics import (
    boundary_average,
    boundary_flux_check,
    compute_phi,
    e_norm_series,
    entropy_series,
    fit_exponential_rate,
    phi_identity_residual,
    phi_ode_residual,
    poincare_rate,
    relative_entropy,
    stationary_flux_check,
    weighted_e_norm,
)

import goldens


@pytest.fixture(scope="module")
def quad():
    return make_canonical_drift("Quadratic")


@pytest.fixture(scope="module")
def grid():
    return Grid.from_bounds(-8.0, 18.0, 0.01)


@pytest.fixture(scope="module")
def prof(quad, grid):
    return compute_steady_state(quad, grid)


@pytest.fixture(scope="module")
def short_run(quad):
    g = Grid.from_bounds(-8.0, 14.0, 0.02)
    op = build_operator(quad, g, R=10.0, alpha_R=1000.0)
    u0 = DensityField.gaussian(g, -3.0, 0.3)
    return g, op, evolve(u0, quad, g, dt=2e-3, t_end=2.0, snapshot_every=0.05, op=op)


def test_fit_recovers_synthetic_rate():
    t = np.linspace(0.0, 8.0, 161)
    fit = fit_exponential_rate(t, 3.0 * np.exp(-2.0 * t))
    assert fit.lambda_hat == pytest.approx(2.0, rel=1e-10)
    assert fit.m_hat == pytest.approx(3.0, rel=1e-10)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.window == (2.0, 8.0)


def test_fit_tolerates_noise():
    rng = np.random.default_rng(7)
    t = np.linspace(0.0, 8.0, 161)
    v = 3.0 * np.exp(-2.0 * t) * (1.0 + 0.01 * rng.standard_normal(t.size))
    fit = fit_exponential_rate(t, v)
    assert abs(fit.lambda_hat - 2.0) <= 0.05
    assert fit.accepted


def test_fit_needs_samples_and_positive_values():
    t = np.linspace(0.0, 1.0, 8)
    with pytest.raises(ValueError):
        fit_exponential_rate(t, np.exp(-t))
    t = np.linspace(0.0, 1.0, 100)
    with pytest.raises(ValueError):
        fit_exponential_rate(t, np.zeros_like(t))


def test_e_norm_weights_the_left(grid):
    u = DensityField.point_mass(grid, -4.0)
    zero = DensityField(grid, np.zeros(grid.n_cells))
    assert weighted_e_norm(u, zero) == pytest.approx(5.0, rel=1e-12)
    assert weighted_e_norm(DensityField.point_mass(grid, 3.0), zero) == pytest.approx(1.0, rel=1e-12)


def test_square_entropy_of_zero_is_one(prof, grid):
    zero = DensityField(grid, np.zeros(grid.n_cells))
    assert relative_entropy(zero, prof, "Square") == pytest.approx(1.0, abs=1e-8)


def test_entropy_at_reference_is_tail_mass(prof):
    # u matches u_inf on the grid; only the out-of-grid mass contributes
    u = DensityField(prof.grid, prof.values.copy())
    tails = prof.left_tail_mass + prof.right_tail_mass
    assert relative_entropy(u, prof, "Square") == pytest.approx(tails, abs=1e-12)
    assert relative_entropy(u, prof, "Abs") == pytest.approx(tails, abs=1e-12)
    assert relative_entropy(u, u, "Square") == 0.0


def test_positive_entropy_uses_threshold(prof):
    u = DensityField(prof.grid, 0.5 * prof.values)
    assert relative_entropy(u, prof, "Positive", c0=1.0) == 0.0


def test_entropy_decreases_along_run(short_run):
    g, op, tr = short_run
    for kind in ("Square", "Abs"):
        assert entropy_series(tr, op.equilibrium, kind).monotone()


def test_e_norm_decreases_along_run(short_run):
    _, op, tr = short_run
    _, en = e_norm_series(tr, op.equilibrium)
    assert en[-1] < 0.5 * en[0]


def test_phi_is_signed_and_increasing(quad, grid):
    phi = compute_phi(quad, grid)
    iz = grid.index_of_zero
    assert phi.values[iz] == 0.0
    assert np.all(phi.values[:iz] < 0.0) and np.all(phi.values[iz + 1:] > 0.0)
    assert np.all(np.diff(phi.values) > 0.0)
    assert phi.values[-1] < phi.c_phi


def test_phi_solves_its_ode(quad, grid):
    phi = compute_phi(quad, grid)
    assert np.max(np.abs(phi_ode_residual(phi, [-2.0, 0.5, 3.0]))) <= 1e-7


def test_c_phi_is_inverse_rate(quad, grid):
    phi = compute_phi(quad, grid)
    assert 1.0 / phi.c_phi == pytest.approx(goldens.N_INF_QUADRATIC, abs=goldens.N_INF_TOL)


def test_phi_identity_small_early(quad, short_run):
    g, _, tr = short_run
    ts, res = phi_identity_residual(tr, compute_phi(quad, g))
    assert res[0] == 0.0
    assert res[ts <= 0.5].max() <= 1e-2


def test_stationary_flux_within_zeta(prof, quad):
    rows = stationary_flux_check(prof, quad, [4.0, 6.0, 8.0])
    assert all(r["ok"] for r in rows)
    assert rows[0]["rel_discrepancy"] > rows[-1]["rel_discrepancy"]


def test_boundary_flux_probe_bound(quad, short_run):
    _, _, tr = short_run
    with pytest.raises(ValueError):
        boundary_flux_check(tr, quad, [12.0])
    rows = boundary_flux_check(tr, quad, [6.0])
    assert rows[0]["h_u"].shape == tr.snapshot_times.shape


def test_boundary_average_of_reference_is_one(prof):
    u = DensityField(prof.grid, prof.values.copy())
    assert boundary_average(u, prof, 6.0) == pytest.approx(1.0)


def test_poincare_gate(grid):
    expo = make_canonical_drift("Exponential")
    est = poincare_rate(compute_steady_state(expo, grid), expo)
    assert est.applicable and np.isfinite(est.k)
    assert est.mu_lower == pytest.approx(1.0 / (4.0 * est.k))
    fine = poincare_rate(compute_steady_state(expo, Grid.from_bounds(-8.0, 18.0, 0.005)), expo)
    assert fine.k == pytest.approx(est.k, rel=1e-2)
    quad = make_canonical_drift("Quadratic")
    q = poincare_rate(compute_steady_state(quad, grid), quad)
    assert not q.applicable and q.mu_lower == 0.0
