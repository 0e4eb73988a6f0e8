import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpif import (
    DriftSpec,
    blowup_time,
    eval_drift,
    make_callable_drift,
    make_canonical_drift,
    make_table_drift,
    poincare_condition_sup,
    validate_assumptions,
    zeta,
)

import goldens


@pytest.fixture(scope="module")
def quad():
    return make_canonical_drift("Quadratic")


@pytest.fixture(scope="module")
def expo():
    return make_canonical_drift("Exponential")


def test_blend_value_at_zero(quad, expo):
    assert quad.h(0.0) == pytest.approx(goldens.H0_QUADRATIC, abs=1e-12)
    assert expo.h(0.0) == pytest.approx(goldens.H0_EXPONENTIAL, abs=1e-12)


def test_branches(quad, expo):
    x = np.array([-5.0, -1.5])
    np.testing.assert_allclose(quad.h(x), -x, atol=1e-14)
    np.testing.assert_allclose(quad.h(np.array([2.0, 7.0])), [4.0, 49.0], rtol=1e-14)
    np.testing.assert_allclose(expo.h(3.0), np.exp(3.0), rtol=1e-14)


@pytest.mark.parametrize("kind", ["Quadratic", "Exponential"])
def test_c1_at_junctions(kind):
    spec = make_canonical_drift(kind)
    eps = 1e-7
    for x in (spec.x0, spec.x1):
        assert spec.h(x - eps) == pytest.approx(spec.h(x + eps), abs=1e-5)
        assert spec.dh(x - eps) == pytest.approx(spec.dh(x + eps), abs=1e-5)


def test_zeta_goldens(quad, expo):
    assert zeta(quad, 2.0) == pytest.approx(goldens.ZETA_QUADRATIC_2, rel=1e-10)
    assert zeta(expo, 3.0) == pytest.approx(goldens.ZETA_EXPONENTIAL_3, rel=1e-10)


def test_zeta_domain(quad):
    with pytest.raises(ValueError):
        zeta(quad, 0.5)


def test_blowup_time_closed_forms(quad, expo):
    assert blowup_time(quad, 4.0) == pytest.approx(0.25, rel=1e-12)
    assert blowup_time(expo, 2.0) == pytest.approx(np.exp(-2.0), rel=1e-12)
    with pytest.raises(ValueError):
        blowup_time(quad, 0.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.0, 50.0), st.floats(0.0, 20.0))
def test_zeta_non_increasing(x, step):
    spec = make_canonical_drift("Quadratic")
    assert zeta(spec, x + step) <= zeta(spec, x) + 1e-15


@settings(max_examples=40, deadline=None)
@given(st.floats(1.1, 30.0), st.floats(0.01, 5.0))
def test_blowup_additivity(a, gap):
    spec = make_canonical_drift("Quadratic")
    from scipy.integrate import quad as squad

    b = a + gap
    between = squad(lambda y: 1.0 / spec.h(y), a, b, epsrel=1e-12)[0]
    assert blowup_time(spec, a) == pytest.approx(between + blowup_time(spec, b), rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.floats(-6.0, 6.0))
def test_potential_derivative_is_drift(x):
    spec = make_canonical_drift("Exponential")
    d = 1e-5
    fd = (spec.H(x + d) - spec.H(x - d)) / (2 * d)
    assert fd == pytest.approx(spec.h(x), rel=1e-6, abs=1e-6)


def test_potential_zero_at_origin(quad):
    assert quad.H(0.0) == 0.0
    p = eval_drift(quad, np.array([0.0, 2.0]))
    assert p.h.shape == (2,)


def test_assumption_pattern(quad, expo):
    assert validate_assumptions(quad).admissible
    assert validate_assumptions(expo).admissible
    xs = np.linspace(1.0, 20.0, 64)
    linear = validate_assumptions(make_table_drift(xs, xs, np.ones_like(xs)))
    assert not linear.admissible
    assert not linear.inv_h_integrable


def test_poincare_condition(quad, expo):
    assert poincare_condition_sup(expo)["bounded"]
    assert not poincare_condition_sup(quad)["bounded"]


def test_table_drift_matches_canonical(quad):
    xs = np.linspace(1.0, 10.0, 200)
    table = make_table_drift(xs, xs**2, 2 * xs)
    y = np.array([1.5, 4.0, 9.5, 20.0])
    np.testing.assert_allclose(table.h(y), quad.h(y), rtol=1e-6)


def test_callable_drift_cubic_is_admissible():
    spec = make_callable_drift(lambda x: x**3, lambda x: 3 * x**2)
    assert validate_assumptions(spec).admissible
    assert blowup_time(spec, 2.0) == pytest.approx(1.0 / 8.0, rel=1e-6)


def test_degenerate_blend_rejected():
    with pytest.raises(ValueError):
        make_canonical_drift("Quadratic", x0=0.0, x1=0.0)


def test_dict_round_trip(expo):
    again = DriftSpec.from_dict(expo.to_dict())
    x = np.linspace(-3.0, 4.0, 11)
    np.testing.assert_array_equal(again.h(x), expo.h(x))
