import numpy as np
import pytest

from fpif import (
    ConfigurationError,
    Grid,
    compute_steady_state,
    compute_truncated_steady_state,
    default_alpha,
    default_truncated_grid,
    fisher_integral,
    make_canonical_drift,
    tail_residual,
    truncated_lambda,
    zeta,
)
from fpif.steady_state import l1_distance, stationary_residual

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


def test_grid_snaps_zero_to_a_centre(grid):
    assert grid.centers[grid.index_of_zero] == 0.0
    assert grid.x_min <= -8.0 and grid.x_max >= 18.0
    assert grid.x_min > -8.0 - grid.dx


def test_firing_rate_matches_oracle(prof):
    assert prof.n_inf == pytest.approx(goldens.N_INF_QUADRATIC, abs=goldens.N_INF_TOL)


def test_exponential_rate_matches_oracle(grid):
    p = compute_steady_state(make_canonical_drift("Exponential"), grid)
    assert p.n_inf == pytest.approx(goldens.N_INF_EXPONENTIAL, abs=goldens.N_INF_TOL)


def test_rate_independent_of_grid(quad, prof):
    other = compute_steady_state(quad, Grid.from_bounds(-10.0, 30.0, 0.02))
    assert other.n_inf == pytest.approx(prof.n_inf, rel=1e-12)


def test_mass_and_positivity(prof):
    assert prof.mass == pytest.approx(1.0, abs=1e-8)
    assert np.all(prof.values > 0.0)
    assert prof.grid_mass < 1.0


def test_ode_residual(prof):
    res = stationary_residual(prof)
    assert np.max(np.abs(res)) <= 1e-6 * prof.n_inf


def test_flux_equals_rate_on_the_right(prof, quad):
    x = np.array([0.5, 3.0, 12.0])
    flux = quad.h(x) * prof(x) - prof.derivative(x)
    np.testing.assert_allclose(flux, prof.n_inf, rtol=1e-9)


def test_left_flux_vanishes(prof, quad):
    x = np.array([-6.0, -2.0, -0.5])
    flux = quad.h(x) * prof(x) - prof.derivative(x)
    np.testing.assert_allclose(flux, 0.0, atol=1e-9)


@pytest.mark.parametrize("x_from", [5.0, 8.0])
def test_tail_sandwich(prof, quad, x_from):
    assert tail_residual(prof, quad, x_from) <= zeta(quad, x_from)


def test_fisher_integral_finite(prof, quad):
    assert np.isfinite(fisher_integral(prof, quad))


def test_grid_must_cover_blend(quad):
    with pytest.raises(ConfigurationError):
        compute_steady_state(quad, Grid.from_bounds(-0.5, 18.0, 0.01))


def test_truncated_lambda_golden(quad):
    assert truncated_lambda(quad, 10.0, 1000.0) == pytest.approx(goldens.LAMBDA_R10, rel=1e-12)
    lam = truncated_lambda(quad, 100.0, 1e6)
    assert lam / (1e6 / 1e4) == pytest.approx(goldens.LAMBDA_RATIO_R100, rel=1e-10)
    assert 0.95 <= lam / (1e6 / 1e4) <= 1.0


def test_default_alpha(quad):
    assert default_alpha(quad, 10.0) == pytest.approx(1000.0)


def test_truncated_state_properties(quad, grid):
    tr = compute_truncated_steady_state(quad, 10.0, 1000.0, grid)
    assert tr.profile.mass == pytest.approx(1.0, abs=1e-8)
    assert np.all(tr.profile.values >= 0.0)
    # continuity of value and slope across R
    d = tr.profile.density
    eps = 1e-7
    assert d(10.0 - eps) == pytest.approx(d(10.0 + eps), rel=1e-5)
    assert d.derivative(10.0 - eps) == pytest.approx(d.derivative(10.0 + eps), rel=1e-4)


def test_truncated_flux(quad, grid):
    tr = compute_truncated_steady_state(quad, 10.0, 1000.0, grid)
    d = tr.profile.density
    x = np.array([0.5, 4.0, 9.5])
    np.testing.assert_allclose(quad.h(x) * d(x) - d.derivative(x), tr.nbar_R, rtol=1e-9)
    x = np.array([-4.0, -0.5])
    np.testing.assert_allclose(quad.h(x) * d(x) - d.derivative(x), 0.0, atol=1e-9)


def test_truncation_converges(quad, prof):
    gaps = []
    for R in (10.0, 20.0, 40.0):
        g = default_truncated_grid(quad, R, R**3)
        t = compute_truncated_steady_state(quad, R, R**3, g)
        gaps.append(abs(t.nbar_R - prof.n_inf))
    assert gaps[0] > gaps[1] > gaps[2]
    # O(1/R): halving ratio close to 2
    assert gaps[0] / gaps[1] == pytest.approx(2.0, rel=0.05)


def test_l1_distance_self_zero(prof, grid):
    assert l1_distance(prof.density, prof.density, grid) == 0.0
