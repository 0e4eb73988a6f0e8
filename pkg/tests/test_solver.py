import numpy as np
import pytest

from fpif import (
    ConfigurationError,
    DensityField,
    Grid,
    build_operator,
    compute_steady_state,
    evolve,
    firing_rate,
    flux_profile,
    make_canonical_drift,
    step,
)


@pytest.fixture(scope="module")
def quad():
    return make_canonical_drift("Quadratic")


@pytest.fixture(scope="module")
def coarse(quad):
    grid = Grid.from_bounds(-8.0, 14.0, 0.05)
    return grid, build_operator(quad, grid, R=10.0, alpha_R=1000.0)


def test_generator_is_conservative_m_matrix(coarse):
    _, op = coarse
    L = op.dense()
    np.testing.assert_allclose(L.sum(axis=0), 0.0, atol=1e-9 * np.abs(L).max())
    off = L - np.diag(np.diag(L))
    assert off.min() >= 0.0
    assert np.all(np.diag(L) <= 0.0)


def test_apply_matches_dense(coarse):
    grid, op = coarse
    u = DensityField.gaussian(grid, -2.0, 0.5).cells
    np.testing.assert_allclose(op.apply(u), op.dense() @ u, rtol=1e-12, atol=1e-12)


def test_implicit_solve_matches_dense(coarse):
    grid, op = coarse
    u = DensityField.gaussian(grid, 1.0, 0.4).cells
    dt = 0.01
    direct = np.linalg.solve(np.eye(grid.n_cells) - dt * op.dense(), u)
    np.testing.assert_allclose(op.solver(dt)(u), direct, rtol=1e-9, atol=1e-12)


def test_factorisation_cached(coarse):
    _, op = coarse
    assert op.solver(0.02) is op.solver(0.02)


def test_equilibrium_is_fixed_point(coarse):
    _, op = coarse
    u = op.equilibrium.cells
    assert np.max(np.abs(op.apply(u))) <= 1e-10 * np.max(np.abs(op.dense())) * u.max()


def test_equilibrium_rate(coarse):
    _, op = coarse
    assert firing_rate(op.equilibrium, op) == pytest.approx(op.nbar_R, rel=1e-4)


def test_conservation_and_positivity(quad, coarse):
    grid, op = coarse
    u0 = DensityField.gaussian(grid, -3.0, 0.3)
    tr = evolve(u0, quad, grid, dt=1e-3, t_end=1.0, op=op)
    assert np.max(np.abs(tr.mass - 1.0)) <= 1e-10
    assert tr.min_value.min() >= 0.0
    assert tr.firing_rate[-1] > 0.0


def test_point_mass_stays_probability(quad, coarse):
    grid, op = coarse
    u = DensityField.point_mass(grid, 12.0)
    for _ in range(20):
        u = step(u, op, 1e-3)
    assert u.mass == pytest.approx(1.0, abs=1e-12)
    assert u.cells.min() >= 0.0


def test_l1_contraction(quad, coarse):
    grid, op = coarse
    u = DensityField.gaussian(grid, -4.0, 0.5).cells
    v = DensityField.gaussian(grid, 3.0, 0.2).cells
    solve = op.solver(1e-3)
    dist = [np.sum(np.abs(u - v))]
    for _ in range(300):
        u, v = solve(u), solve(v)
        dist.append(np.sum(np.abs(u - v)))
    assert np.max(np.diff(dist)) <= 1e-12


def test_comparison_principle(quad, coarse):
    grid, op = coarse
    eq = op.equilibrium.cells
    u0 = DensityField.gaussian(grid, 1.0, 1.0).cells
    C = np.max(u0 / eq)
    solve = op.solver(1e-3)
    u = u0
    for _ in range(200):
        u = solve(u)
        assert np.all(u <= C * eq * (1 + 1e-10))


def test_first_order_in_time(quad, coarse):
    grid, op = coarse
    u0 = DensityField.gaussian(grid, -1.0, 0.5)
    ends = [evolve(u0, quad, grid, dt=dt, t_end=0.2, op=op).snapshot(0.2).cells for dt in (4e-3, 2e-3, 1e-3)]
    e1 = np.sum(np.abs(ends[0] - ends[1]))
    e2 = np.sum(np.abs(ends[1] - ends[2]))
    assert e1 / e2 == pytest.approx(2.0, rel=0.1)


def test_stationary_flux_profile(quad):
    grid = Grid.from_bounds(-8.0, 18.0, 0.01)
    prof = compute_steady_state(quad, grid)
    F = flux_profile(DensityField(grid, prof.point_values), quad)
    faces = grid.faces[1:-1]
    left = faces < 0.0
    assert np.max(np.abs(F[left])) <= 1e-6 * prof.n_inf
    np.testing.assert_allclose(F[(faces > 0.0) & (faces < 17.0)], prof.n_inf, rtol=1e-6)


def test_plain_absorption_rate(quad):
    grid = Grid.from_bounds(-8.0, 14.0, 0.05)
    op = build_operator(quad, grid, R=10.0, alpha_R=1000.0, well_balanced=False)
    u = DensityField.point_mass(grid, 12.0)
    assert firing_rate(u, op) == pytest.approx(1000.0 * u.mass, rel=1e-12)


def test_well_balanced_rates_close_to_alpha(quad):
    grid = Grid.from_bounds(-8.0, 14.0, 0.01)
    op = build_operator(quad, grid, R=10.0, alpha_R=1000.0)
    inner = (grid.centers > 10.5) & (grid.centers < 13.0)
    np.testing.assert_allclose(op.phi[inner], 1000.0, rtol=0.01)
    assert np.all(op.phi[grid.centers < 9.9] == 0.0)


def test_peclet_limit(quad):
    with pytest.raises(ConfigurationError):
        build_operator(quad, Grid.from_bounds(-8.0, 18.0, 6.0), R=10.0)


def test_rejects_bad_truncation(quad):
    grid = Grid.from_bounds(-8.0, 18.0, 0.05)
    with pytest.raises(ConfigurationError):
        build_operator(quad, grid, R=0.5)
    with pytest.raises(ConfigurationError):
        build_operator(quad, grid, R=20.0)


def test_rejects_non_probability(quad, coarse):
    grid, op = coarse
    bad = DensityField(grid, 2.0 * DensityField.gaussian(grid, 0.0, 1.0).cells)
    with pytest.raises(ValueError):
        evolve(bad, quad, grid, op=op)
