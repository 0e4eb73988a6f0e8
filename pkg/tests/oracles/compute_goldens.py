"""Independent oracles for the golden values frozen into the test suite.

Nothing here imports the package: the blend is re-derived from a 4x4 linear
solve, N_inf uses nested adaptive quadrature and a fine-mesh trapezoid sum at two resolutions, suprema use brute-force
grids and lambda_R a bracketing root finder. Run once; paste the printed
values into tests/goldens.py.
"""

import math

import numpy as np
from scipy import integrate, optimize


def hermite_monomial(x0=-1.0, x1=1.0, right="quadratic"):
    """Coefficients c of h(x) = c0 + c1 x + c2 x^2 + c3 x^3 on [x0, x1]."""
    y1, m1 = (x1**2, 2 * x1) if right == "quadratic" else (math.exp(x1), math.exp(x1))
    A = np.array([
        [1, x0, x0**2, x0**3],
        [0, 1, 2 * x0, 3 * x0**2],
        [1, x1, x1**2, x1**3],
        [0, 1, 2 * x1, 3 * x1**2],
    ], dtype=float)
    return np.linalg.solve(A, np.array([-x0, -1.0, y1, m1]))


def make_H(right):
    c = hermite_monomial(right=right)

    def blend_anti(x):
        return c[0] * x + c[1] * x**2 / 2 + c[2] * x**3 / 3 + c[3] * x**4 / 4

    def H(x):
        if x <= -1:
            return blend_anti(-1.0) - x**2 / 2 + 0.5
        if x <= 1:
            return blend_anti(x)
        if right == "quadratic":
            return blend_anti(1.0) + (x**3 - 1) / 3
        return blend_anti(1.0) + math.exp(x) - math.e

    def h(x):
        if x <= -1:
            return -x
        if x <= 1:
            return c[0] + c[1] * x + c[2] * x**2 + c[3] * x**3
        return x**2 if right == "quadratic" else math.exp(x)

    return H, h


def n_inf_quad(right):
    """Nested adaptive quadrature of c_phi = int_0^inf int_-inf^y e^{H(x)-H(y)} dx dy."""
    H, h = make_H(right)

    def inner(y):
        w = 40.0 / max(h(y), 1.0)
        lo = y - w
        pts = [p for p in (-1.0, 1.0) if lo < p < y]
        core = integrate.quad(lambda x: math.exp(H(x) - H(y)), lo, y, points=pts or None,
                              epsabs=0, epsrel=1e-13, limit=400)[0]
        far = integrate.quad(lambda x: math.exp(H(x) - H(y)), -np.inf, lo, epsabs=1e-300,
                             epsrel=1e-13, limit=400)[0] if lo > -30 else 0.0
        return core + far

    Y = 1000.0 if right == "quadratic" else 30.0
    knots = [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0, 256.0, Y] if right == "quadratic" else [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, Y]
    total = sum(integrate.quad(inner, a, b, epsabs=0, epsrel=1e-12, limit=400)[0]
                for a, b in zip(knots[:-1], knots[1:]))
    # P ~ 1/h - h'/h^3 in the far tail
    total += (1 / Y - 1 / (2 * Y**4)) if right == "quadratic" else math.exp(-Y)
    return 1 / total


def n_inf_mesh(right, n):
    """Same double integral as a cumulative trapezoid sum of e^{H} on a fine mesh."""
    H, h = make_H(right)
    Y = 1000.0 if right == "quadratic" else 30.0
    # stretched mesh: uniform in s with x = sinh-like map to resolve 1/h widths
    s = np.linspace(-12.0, math.log(Y) if right == "exponential" else Y ** (1 / 3), n)
    x = np.where(s < 0, s, s**3) if right == "quadratic" else np.where(s < 0, s, np.expm1(s))
    Hx = np.array([H(v) for v in x])
    # P(y) = int e^{H(x)-H(y)} cumulated cell by cell
    P = np.zeros_like(x)
    for i in range(1, x.size):
        d = x[i] - x[i - 1]
        dH = Hx[i] - Hx[i - 1]
        e = math.exp(-dH)
        # exact for H linear on the cell
        w = d * (-math.expm1(-dH) / dH) if abs(dH) > 1e-12 else d
        P[i] = P[i - 1] * e + w
    m = x >= 0
    c = integrate.trapezoid(P[m], x[m])
    c += (1 / Y - 1 / (2 * Y**4)) if right == "quadratic" else math.exp(-Y)
    return 1 / c


def main():
    c = hermite_monomial()
    print("h(0) blend quadratic:", c[0])
    print("h(0) blend exponential:", hermite_monomial(right="exponential")[0])
    ys = np.linspace(2.0, 2000.0, 2_000_001)
    print("zeta quad(2):", np.max(2 * ys / ys**4))
    ys = np.linspace(3.0, 60.0, 2_000_001)
    print("zeta exp(3):", np.max(np.exp(ys) / np.exp(2 * ys)))
    f = lambda lam: lam**2 + 100.0 * lam - 1000.0
    print("lambda_R(10, 1000):", optimize.brentq(f, 0.0, 100.0, xtol=1e-14))
    lam100 = optimize.brentq(lambda lam: lam**2 + 1e4 * lam - 1e6, 0.0, 1e4, xtol=1e-14)
    print("lambda_R(100,1e6) / (alpha/h):", lam100 / (1e6 / 1e4))
    for right in ("quadratic", "exponential"):
        q = n_inf_quad(right)
        a, b = n_inf_mesh(right, 200_001), n_inf_mesh(right, 400_001)
        print(f"N_inf {right}: quad {q:.12f} mesh {a:.12f} / {b:.12f} extrapolated {2 * b - a:.12f}")


if __name__ == "__main__":
    main()
