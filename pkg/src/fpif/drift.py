"""Drift functions with an affine left branch and a superlinear right branch.

A drift is assembled from three pieces::

    h(x) = -x + h0            for x <= x0
    h(x) = cubic Hermite      for x0 <= x <= x1   (C^1 at both ends)
    h(x) = right branch       for x >= x1

The right branch is ``x**2`` or ``exp(x)`` for the built-in kinds. Custom
drifts take either a table of ``(x, h, h')`` samples continued by a power or
exponential tail, or a pair of Python callables.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import interpolate

from ._quad import gl_nodes, gl_integrate

__all__ = [
    "DriftKind",
    "DriftSpec",
    "DriftPoint",
    "AssumptionsReport",
    "make_canonical_drift",
    "make_table_drift",
    "make_callable_drift",
    "eval_drift",
    "zeta",
    "validate_assumptions",
    "blowup_time",
    "poincare_condition_sup",
]


class DriftKind(str, enum.Enum):
    QUADRATIC = "Quadratic"
    EXPONENTIAL = "Exponential"
    CUSTOM = "Custom"


# ---------------------------------------------------------------------------
# Right branches
# ---------------------------------------------------------------------------


class _QuadraticBranch:
    """h(x) = x**2."""

    label = "quadratic"

    def h(self, x):
        return x * x

    def dh(self, x):
        return 2.0 * x

    def d2h(self, x):
        return np.full_like(np.asarray(x, dtype=float), 2.0)

    def anti(self, x):
        return x**3 / 3.0

    def inv_h_tail(self, x):
        return 1.0 / x

    def zeta(self, x):
        # 2/y**3 is decreasing, so the supremum sits at the left end.
        return 2.0 / np.asarray(x, dtype=float) ** 3

    def zeta_integral(self, x1):
        return 1.0 / x1**2, 0.0

    def f_integral(self, x1):
        return 4.0 / (3.0 * x1**3), 0.0

    def inv_h_integral(self, x1):
        return 1.0 / x1, 0.0

    def poincare_sup(self, x1):
        # h * int 1/h = x on the tail.
        return False, math.inf

    def right_monotone(self, x1):
        return x1 > 0.0


class _ExponentialBranch:
    """h(x) = exp(x)."""

    label = "exponential"

    def h(self, x):
        return np.exp(x)

    def dh(self, x):
        return np.exp(x)

    def d2h(self, x):
        return np.exp(x)

    def anti(self, x):
        return np.exp(x)

    def inv_h_tail(self, x):
        return np.exp(-np.asarray(x, dtype=float))

    def zeta(self, x):
        return np.exp(-np.asarray(x, dtype=float))

    def zeta_integral(self, x1):
        return math.exp(-x1), 0.0

    def f_integral(self, x1):
        return math.exp(-x1), 0.0

    def inv_h_integral(self, x1):
        return math.exp(-x1), 0.0

    def poincare_sup(self, x1):
        return True, 1.0

    def right_monotone(self, x1):
        return True


@dataclass(frozen=True)
class _Tail:
    """Analytic continuation ``c*y**p`` (power) or ``exp(log_c + a*y)`` (exp)
    for y >= start."""

    kind: str
    start: float
    coef: float  # c for power, log c for exp
    rate: float  # p for power, a for exp

    @classmethod
    def matching(cls, kind, x, h, dh):
        if kind == "power":
            p = x * dh / h
            return cls("power", x, h / x**p, p)
        if kind == "exp":
            a = dh / h
            return cls("exp", x, math.log(h) - a * x, a)
        raise ValueError(f"unknown tail kind {kind!r}")

    def h(self, y):
        if self.kind == "power":
            return self.coef * y**self.rate
        return np.exp(self.coef + self.rate * y)

    def dh(self, y):
        if self.kind == "power":
            return self.coef * self.rate * y ** (self.rate - 1.0)
        return self.rate * np.exp(self.coef + self.rate * y)

    def d2h(self, y):
        if self.kind == "power":
            p = self.rate
            return self.coef * p * (p - 1.0) * y ** (p - 2.0)
        return self.rate**2 * np.exp(self.coef + self.rate * y)

    def anti(self, y):
        """Integral of h from ``start`` to y."""
        if self.kind == "power":
            p = self.rate
            if p == -1.0:
                return self.coef * np.log(y / self.start)
            return self.coef * (y ** (p + 1.0) - self.start ** (p + 1.0)) / (p + 1.0)
        a = self.rate
        return (np.exp(self.coef + a * y) - np.exp(self.coef + a * self.start)) / a

    def inv_h(self, y):
        """Integral of 1/h from y to infinity."""
        y = np.asarray(y, dtype=float)
        if self.kind == "power":
            p = self.rate
            if p <= 1.0:
                return np.full_like(y, np.inf)
            return y ** (1.0 - p) / (self.coef * (p - 1.0))
        return np.exp(-(self.coef + self.rate * y)) / self.rate

    def zeta(self, y):
        # h'/h**2 is decreasing on both tail classes.
        if self.kind == "power":
            return self.rate / (self.coef * np.asarray(y, dtype=float) ** (self.rate + 1.0))
        return self.rate * np.exp(-(self.coef + self.rate * np.asarray(y, dtype=float)))

    def zeta_integral(self):
        if self.kind == "power":
            return 1.0 / (self.coef * self.start**self.rate)
        return math.exp(-(self.coef + self.rate * self.start))

    def f_integral(self):
        if self.kind == "power":
            p = self.rate
            return p * p / (self.coef * (p + 1.0) * self.start ** (p + 1.0))
        return self.rate * math.exp(-(self.coef + self.rate * self.start))

    def poincare_sup(self):
        if self.kind == "power":
            return False, math.inf
        return True, 1.0 / self.rate

    def positive(self):
        if self.kind == "power":
            return self.coef > 0.0 and self.rate > 0.0
        return self.rate > 0.0


class _NumericBranch:
    """Right branch known only through values and slopes on [x1, tail.start],
    continued analytically by ``tail``."""

    label = "custom"

    def __init__(self, h, dh, x1, tail, d2h=None, n_panels=2048):
        self._h = h
        self._dh = dh
        self._d2h = d2h
        self.x1 = float(x1)
        self.tail = tail
        x_end = tail.start
        # Geometric panels: resolution concentrated near x1.
        self.faces = self.x1 - 1.0 + np.geomspace(1.0, x_end - self.x1 + 1.0, n_panels + 1)
        self.faces[0], self.faces[-1] = self.x1, x_end
        self._cum_anti = np.concatenate([[0.0], np.cumsum(gl_integrate(self._h, self.faces[:-1], self.faces[1:]))])
        inv = gl_integrate(lambda y: 1.0 / self._h(y), self.faces[:-1], self.faces[1:])
        self._cum_inv = np.concatenate([np.cumsum(inv[::-1])[::-1], [0.0]])
        self._n_panels = n_panels

    def _split(self, x):
        x = np.asarray(x, dtype=float)
        inner = x < self.tail.start
        return x, inner

    def h(self, x):
        x, inner = self._split(x)
        return np.where(inner, self._h(np.minimum(x, self.tail.start)), self.tail.h(np.maximum(x, self.tail.start)))

    def dh(self, x):
        x, inner = self._split(x)
        return np.where(inner, self._dh(np.minimum(x, self.tail.start)), self.tail.dh(np.maximum(x, self.tail.start)))

    def d2h(self, x):
        x, inner = self._split(x)
        xi = np.minimum(x, self.tail.start)
        if self._d2h is not None:
            inner_val = self._d2h(xi)
        else:
            step = 1e-5 * np.maximum(1.0, np.abs(xi))
            inner_val = (self._dh(xi + step) - self._dh(xi - step)) / (2.0 * step)
        return np.where(inner, inner_val, self.tail.d2h(np.maximum(x, self.tail.start)))

    def _locate(self, x):
        k = np.searchsorted(self.faces, x, side="right") - 1
        return np.clip(k, 0, self._n_panels - 1)

    def anti(self, x):
        x, inner = self._split(x)
        xi = np.clip(x, self.x1, self.tail.start)
        k = self._locate(xi)
        part = self._cum_anti[k] + gl_integrate(self._h, self.faces[k], xi)
        full = self._cum_anti[-1] + self.tail.anti(np.maximum(x, self.tail.start))
        return np.where(inner, part, full)

    def inv_h_tail(self, x):
        x, inner = self._split(x)
        xi = np.clip(x, self.x1, self.tail.start)
        k = self._locate(xi)
        part = self._cum_inv[k + 1] + gl_integrate(lambda y: 1.0 / self._h(y), xi, self.faces[k + 1])
        tail_val = self.tail.inv_h(self.tail.start)
        return np.where(inner, part + tail_val, self.tail.inv_h(np.maximum(x, self.tail.start)))

    def _zeta_scalar(self, x):
        if x >= self.tail.start:
            return float(self.tail.zeta(x))
        tail_sup = float(self.tail.zeta(self.tail.start))
        prev = None
        n = 256
        while True:
            ys = x - 1.0 + np.geomspace(1.0, self.tail.start - x + 1.0, n)
            val = max(float(np.max(self._dh(ys) / self._h(ys) ** 2)), tail_sup)
            if prev is not None and abs(val - prev) <= 1e-8 * max(abs(val), 1e-300):
                return val
            if n >= 1 << 18:
                return val
            prev, n = val, 2 * n

    def zeta(self, x):
        x = np.asarray(x, dtype=float)
        return np.vectorize(self._zeta_scalar, otypes=[float])(x)

    def _dense_zeta(self, n_panels):
        faces = self.x1 - 1.0 + np.geomspace(1.0, self.tail.start - self.x1 + 1.0, n_panels + 1)
        faces[0], faces[-1] = self.x1, self.tail.start
        nodes, weights = gl_nodes(faces[:-1], faces[1:])
        nodes, weights = nodes.ravel(), weights.ravel()
        ratio = self._dh(nodes) / self._h(nodes) ** 2
        run = np.maximum.accumulate(ratio[::-1])[::-1]
        run = np.maximum(run, float(self.tail.zeta(self.tail.start)))
        return nodes, weights, run

    def _integrals(self, n_panels):
        nodes, weights, z = self._dense_zeta(n_panels)
        iz = float(np.sum(z * weights)) + self.tail.zeta_integral()
        f = self._h(nodes) * z * z
        i_f = float(np.sum(f * weights)) + self.tail.f_integral()
        return iz, i_f

    def zeta_integral(self, x1):
        a, _ = self._integrals(self._n_panels)
        b, _ = self._integrals(self._n_panels // 2)
        return a, abs(a - b)

    def f_integral(self, x1):
        _, a = self._integrals(self._n_panels)
        _, b = self._integrals(self._n_panels // 2)
        return a, abs(a - b)

    def inv_h_integral(self, x1):
        val = float(self.inv_h_tail(self.x1))
        if not np.isfinite(val):
            return math.inf, math.inf
        coarse = gl_integrate(lambda y: 1.0 / self._h(y), self.faces[:-1:2], self.faces[2::2], order=8)
        coarse = float(np.sum(coarse)) + float(self.tail.inv_h(self.tail.start))
        return val, abs(val - coarse)

    def poincare_sup(self, x1):
        tail_bounded, tail_sup = self.tail.poincare_sup()
        ys = self.x1 - 1.0 + np.geomspace(1.0, self.tail.start - self.x1 + 1.0, 4096)
        g = self.h(ys) * self.inv_h_tail(ys)
        # Growth over the last tenth of the sampled range flags an unbounded tail.
        last = g[-410:]
        growing = last[-1] > 1.5 * last[0] and last[-1] > 10.0 * g[0]
        if not tail_bounded or growing:
            return False, math.inf
        return True, max(float(np.max(g)), tail_sup)

    def right_monotone(self, x1):
        nodes = gl_nodes(self.faces[:-1], self.faces[1:], order=4)[0].ravel()
        nodes = np.concatenate([[self.x1], nodes, [self.tail.start]])
        return bool(np.all(self._h(nodes) > 0.0) and np.all(self._dh(nodes) > 0.0) and self.tail.positive())


def _callable_tail(h, dh, x1):
    """Pick a cutoff for a callable branch and fit the matching tail class."""
    x_end = None
    for k in range(1, 41):
        x = x1 + 2.0**k
        with np.errstate(over="ignore", invalid="ignore"):
            hv = float(h(np.array(x)))
        if not np.isfinite(hv) or hv > 1e100 or x > 1e6:
            break
        x_end = x
    if x_end is None:
        raise ValueError("callable drift overflows immediately right of x1")
    hv, dv = float(h(np.array(x_end))), float(dh(np.array(x_end)))
    p_eff = x_end * dv / hv
    kind = "exp" if p_eff > 50.0 else "power"
    return _Tail.matching(kind, x_end, hv, dv)


# ---------------------------------------------------------------------------
# DriftSpec
# ---------------------------------------------------------------------------


class DriftPoint(NamedTuple):
    h: np.ndarray | float
    h_prime: np.ndarray | float
    H_anti: np.ndarray | float


def _hermite(x0, y0, m0, x1, y1, m1):
    """Coefficients (a, b, c, d) of a + b t + c t^2 + d t^3, t = x - x0."""
    L = x1 - x0
    s = (y1 - y0) / L
    return (y0, m0, (3.0 * s - 2.0 * m0 - m1) / L, (m0 + m1 - 2.0 * s) / L**2)


@dataclass(frozen=True, eq=False)
class DriftSpec:
    """Immutable drift h with its derivative and antiderivative H(x) = int_0^x h."""

    kind: DriftKind
    x0: float
    h0: float
    x1: float
    blend: tuple
    right_branch: object = field(repr=False)
    custom_table: dict | None = field(default=None, repr=False)
    _shift: float = field(default=0.0, repr=False)

    def __post_init__(self):
        # H is assembled as A(x) - A(0) with A(x0) = 0.
        object.__setattr__(self, "_shift", float(self._anti_raw(np.array(0.0))))

    # -- pieces -----------------------------------------------------------

    def _blend_h(self, x):
        a, b, c, d = self.blend
        t = x - self.x0
        return a + t * (b + t * (c + t * d))

    def _blend_dh(self, x):
        _, b, c, d = self.blend
        t = x - self.x0
        return b + t * (2.0 * c + 3.0 * d * t)

    def _blend_d2h(self, x):
        _, _, c, d = self.blend
        return 2.0 * c + 6.0 * d * (x - self.x0)

    def _blend_anti(self, x):
        a, b, c, d = self.blend
        t = x - self.x0
        return t * (a + t * (b / 2.0 + t * (c / 3.0 + t * d / 4.0)))

    def _pieces(self, x):
        x = np.asarray(x, dtype=float)
        return x, x <= self.x0, x >= self.x1

    # -- public evaluation ------------------------------------------------

    def h(self, x):
        x, left, right = self._pieces(x)
        rb = self.right_branch
        with np.errstate(over="ignore", invalid="ignore"):
            return np.where(left, -x + self.h0, np.where(right, rb.h(np.maximum(x, self.x1)), self._blend_h(x)))

    def dh(self, x):
        x, left, right = self._pieces(x)
        rb = self.right_branch
        with np.errstate(over="ignore", invalid="ignore"):
            return np.where(left, -1.0, np.where(right, rb.dh(np.maximum(x, self.x1)), self._blend_dh(x)))

    def d2h(self, x):
        x, left, right = self._pieces(x)
        rb = self.right_branch
        with np.errstate(over="ignore", invalid="ignore"):
            return np.where(left, 0.0, np.where(right, rb.d2h(np.maximum(x, self.x1)), self._blend_d2h(x)))

    def _anti_raw(self, x):
        x, left, right = self._pieces(x)
        x0, h0, rb = self.x0, self.h0, self.right_branch
        a_left = (-0.5 * x * x + h0 * x) - (-0.5 * x0 * x0 + h0 * x0)
        a_mid = self._blend_anti(np.clip(x, x0, self.x1))
        a_x1 = self._blend_anti(np.float64(self.x1))
        with np.errstate(over="ignore", invalid="ignore"):
            xr = np.maximum(x, self.x1)
            a_right = a_x1 + rb.anti(xr) - rb.anti(np.float64(self.x1))
        return np.where(left, a_left, np.where(right, a_right, a_mid))

    def H(self, x):
        """Antiderivative of h normalised by H(0) = 0."""
        return self._anti_raw(x) - self._shift

    @property
    def h1(self):
        """Constant in H(x) = -x^2/2 + h0 x + h1 for x <= x0."""
        return float(self.H(self.x0) + 0.5 * self.x0**2 - self.h0 * self.x0)

    def inv_h_tail(self, x):
        """Integral of 1/h over [x, inf) for x >= x1."""
        return self.right_branch.inv_h_tail(np.asarray(x, dtype=float))

    # -- serialisation ----------------------------------------------------

    def to_dict(self):
        out = {"kind": self.kind.value, "x0": self.x0, "h0": self.h0, "x1": self.x1}
        if self.kind is DriftKind.CUSTOM:
            if self.custom_table is None:
                raise ValueError("callable custom drifts cannot be serialised; use a table")
            out["custom_table"] = self.custom_table
        return out

    @classmethod
    def from_dict(cls, d):
        allowed = {"kind", "x0", "h0", "x1", "custom_table"}
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown drift keys: {sorted(unknown)}")
        kind = DriftKind(d.get("kind", "Quadratic"))
        x0 = float(d.get("x0", -1.0))
        h0 = float(d.get("h0", 0.0))
        if kind is DriftKind.CUSTOM:
            table = d.get("custom_table")
            if table is None:
                raise ValueError("Custom drift requires custom_table")
            return make_table_drift(table["x"], table["h"], table["dh"], x0=x0, h0=h0, tail=table.get("tail", "power"))
        return make_canonical_drift(kind, x0=x0, h0=h0, x1=float(d.get("x1", 1.0)))


def _assemble(kind, x0, h0, x1, branch, table=None):
    if x0 > 0.0:
        raise ValueError(f"x0 must be <= 0, got {x0}")
    if x1 < 0.0:
        raise ValueError(f"x1 must be >= 0, got {x1}")
    if not x0 < x1:
        raise ValueError("x0 < x1 is required for the C^1 blend")
    y1 = float(branch.h(np.float64(x1)))
    m1 = float(branch.dh(np.float64(x1)))
    blend = _hermite(x0, -x0 + h0, -1.0, x1, y1, m1)
    return DriftSpec(DriftKind(kind), float(x0), float(h0), float(x1), blend, branch, table)


def make_canonical_drift(kind="Quadratic", x0=-1.0, h0=0.0, x1=1.0):
    """Built-in drift with right branch x**2 (Quadratic) or exp(x) (Exponential)."""
    kind = DriftKind(kind)
    if kind is DriftKind.QUADRATIC:
        branch = _QuadraticBranch()
    elif kind is DriftKind.EXPONENTIAL:
        branch = _ExponentialBranch()
    else:
        raise ValueError("canonical drifts are Quadratic or Exponential; use make_table_drift")
    return _assemble(kind, x0, h0, x1, branch)


def make_table_drift(x, h, dh, x0=-1.0, h0=0.0, tail="power"):
    """Custom drift from samples (x, h(x), h'(x)) on [x[0], x[-1]].

    The samples are joined by a C^1 cubic Hermite spline; beyond ``x[-1]`` the
    branch continues as ``c*x**p`` (``tail="power"``) or ``c*exp(a*x)``
    (``tail="exp"``) matched in value and slope. ``x1`` is ``x[0]``.
    """
    xs = np.asarray(x, dtype=float)
    hs = np.asarray(h, dtype=float)
    ds = np.asarray(dh, dtype=float)
    if xs.ndim != 1 or len(xs) < 2 or xs.shape != hs.shape or xs.shape != ds.shape:
        raise ValueError("table needs matching 1-d arrays with at least two points")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("table abscissae must be strictly increasing")
    spline = interpolate.CubicHermiteSpline(xs, hs, ds)
    dspline = spline.derivative()
    d2spline = spline.derivative(2)
    tail_fit = _Tail.matching(tail, xs[-1], hs[-1], ds[-1])
    branch = _NumericBranch(spline, dspline, xs[0], tail_fit, d2h=d2spline)
    table = {"x": xs.tolist(), "h": hs.tolist(), "dh": ds.tolist(), "tail": tail}
    return _assemble(DriftKind.CUSTOM, x0, h0, float(xs[0]), branch, table)


def make_callable_drift(h: Callable, dh: Callable, x0=-1.0, h0=0.0, x1=1.0, d2h: Callable | None = None):
    """Custom drift whose right branch is given by vectorised callables.

    Integrals beyond an automatically chosen cutoff use a power or exponential
    tail fitted to the value and slope at the cutoff.
    """
    tail = _callable_tail(h, dh, x1)
    branch = _NumericBranch(h, dh, x1, tail, d2h=d2h)
    return _assemble(DriftKind.CUSTOM, x0, h0, x1, branch)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def eval_drift(spec: DriftSpec, x) -> DriftPoint:
    """h, h' and H at ``x`` (scalar or array)."""
    return DriftPoint(spec.h(x), spec.dh(x), spec.H(x))


def zeta(spec: DriftSpec, x):
    """sup over y >= x of h'(y)/h(y)**2, defined for x >= x1."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < spec.x1):
        raise ValueError(f"zeta is defined for x >= x1 = {spec.x1}")
    out = spec.right_branch.zeta(xa)
    return float(out) if np.ndim(out) == 0 else out


def blowup_time(spec: DriftSpec, x_start):
    """Time for the noiseless characteristic from ``x_start`` to reach +inf."""
    xa = np.asarray(x_start, dtype=float)
    if np.any(xa <= spec.x1):
        raise ValueError(f"blow-up time needs x_start > x1 = {spec.x1}")
    out = spec.right_branch.inv_h_tail(xa)
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class AssumptionsReport:
    left_branch_ok: bool
    right_monotone_ok: bool
    inv_h_integrable: bool
    inv_h_integral: float
    inv_h_error: float
    zeta_integrable: bool
    zeta_integral: float
    zeta_error: float
    third_condition_ok: bool
    third_integral: float
    third_error: float
    junction_jump: float
    failures: list = field(default_factory=list)

    @property
    def admissible(self):
        return not self.failures

    def to_dict(self):
        return {
            "left_branch_ok": self.left_branch_ok,
            "right_monotone_ok": self.right_monotone_ok,
            "inv_h_integrable": {"ok": self.inv_h_integrable, "value": self.inv_h_integral, "error": self.inv_h_error},
            "zeta_integrable": {"ok": self.zeta_integrable, "value": self.zeta_integral, "error": self.zeta_error},
            "third_condition_ok": {"ok": self.third_condition_ok, "value": self.third_integral, "error": self.third_error},
            "junction_jump": self.junction_jump,
            "failures": list(self.failures),
        }


def _junction_jump(spec):
    """Largest mismatch of (h, h') across x0 and x1."""
    a, b, c, d = spec.blend
    L = spec.x1 - spec.x0
    rb = spec.right_branch
    y1 = float(rb.h(np.float64(spec.x1)))
    m1 = float(rb.dh(np.float64(spec.x1)))
    jumps = [
        abs(a - (-spec.x0 + spec.h0)),
        abs(b + 1.0),
        abs(a + L * (b + L * (c + L * d)) - y1) / max(1.0, abs(y1)),
        abs(b + L * (2 * c + 3 * d * L) - m1) / max(1.0, abs(m1)),
    ]
    return max(jumps)


def validate_assumptions(spec: DriftSpec) -> AssumptionsReport:
    """Check the left affine form, right monotonicity and the three integrability
    conditions at +inf. Inadmissibility is reported, never raised."""
    failures = []
    xs = spec.x0 - np.linspace(0.0, 50.0, 101)
    left_ok = bool(np.allclose(spec.h(xs), -xs + spec.h0, rtol=0, atol=1e-12))
    if not left_ok:
        failures.append("left_branch")
    jump = _junction_jump(spec)
    if jump > 1e-10:
        failures.append("c1_junction")
    rb = spec.right_branch
    mono = bool(rb.right_monotone(spec.x1)) and float(spec.h(spec.x1)) > 0.0
    if not mono:
        failures.append("right_monotone")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        inv_v, inv_e = rb.inv_h_integral(spec.x1)
        inv_ok = bool(np.isfinite(inv_v))
        if not inv_ok:
            failures.append("inv_h_integrable")
            z_v = z_e = f_v = f_e = math.inf
            z_ok = f_ok = False
        else:
            z_v, z_e = rb.zeta_integral(spec.x1)
            f_v, f_e = rb.f_integral(spec.x1)
            z_ok = bool(np.isfinite(z_v))
            f_ok = bool(np.isfinite(f_v))
    if inv_ok and not z_ok:
        failures.append("zeta_integrable")
    if inv_ok and not f_ok:
        failures.append("third_condition")
    return AssumptionsReport(
        left_branch_ok=left_ok,
        right_monotone_ok=mono,
        inv_h_integrable=inv_ok,
        inv_h_integral=float(inv_v),
        inv_h_error=float(inv_e),
        zeta_integrable=z_ok,
        zeta_integral=float(z_v),
        zeta_error=float(z_e),
        third_condition_ok=f_ok,
        third_integral=float(f_v),
        third_error=float(f_e),
        junction_jump=float(jump),
        failures=failures,
    )


def poincare_condition_sup(spec: DriftSpec):
    """Whether sup_{x >= x1} h(x) int_x^inf dy/h(y) is finite, with its value.

    Returns a dict ``{"bounded": bool, "sup_value": float}``; ``sup_value`` is
    ``inf`` when the supremum diverges.
    """
    bounded, sup_value = spec.right_branch.poincare_sup(spec.x1)
    return {"bounded": bool(bounded), "sup_value": float(sup_value)}
