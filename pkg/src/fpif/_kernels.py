"""Overflow-free evaluation of the two integral kernels built from H.

right kernel  K(x) = exp(H(x)) * int_x^inf exp(-H(y)) dy       (x >= 0)
left kernel   P(x) = exp(-H(x)) * int_-inf^x exp(H(y)) dy

Both are O(1/h) where h is large, so they never overflow even when H(x)
reaches thousands. They solve K' = h K - 1 and P' = 1 - h P; beyond a cutoff
where zeta(x) <= ``TAIL_ZETA`` the asymptotic series of those ODEs replaces
quadrature.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from ._quad import gl_integrate, gl_nodes

TAIL_ZETA = 1e-4
MAX_WIDTH = 0.05
MAX_DH = 1.0


def tail_cutoff(spec, zeta_level=TAIL_ZETA):
    """Smallest x >= x1 (to 1e-6) with zeta(x) <= zeta_level."""
    from .drift import zeta

    lo = max(spec.x1, 1e-3)
    if zeta(spec, lo) <= zeta_level:
        return lo
    hi = lo + 1.0
    while zeta(spec, hi) > zeta_level:
        lo, hi = hi, lo + 2.0 * (hi - lo)
        if hi > 1e7:
            raise ValueError("zeta decays too slowly to place an asymptotic cutoff")
    while hi - lo > 1e-6 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if zeta(spec, mid) <= zeta_level:
            hi = mid
        else:
            lo = mid
    return hi


def adapted_faces(spec, a, b, max_width=MAX_WIDTH, max_dH=MAX_DH):
    """Panel faces on [a, b] with width <= max_width and |h| * width <= max_dH."""
    base = np.linspace(a, b, max(1, int(math.ceil((b - a) / max_width))) + 1)
    lo, hi = base[:-1], base[1:]
    hmax = np.maximum.reduce([np.abs(spec.h(lo)), np.abs(spec.h(hi)), np.abs(spec.h(0.5 * (lo + hi)))])
    n_sub = np.maximum(1, np.ceil(hmax * (hi - lo) / max_dH)).astype(int)
    pieces = [lo[i] + (hi[i] - lo[i]) * np.arange(n_sub[i]) / n_sub[i] for i in range(len(lo))]
    return np.concatenate(pieces + [[b]])


def _k_asymptotic(spec, x):
    h, d1, d2 = spec.h(x), spec.dh(x), spec.d2h(x)
    return 1.0 / h - d1 / h**3 - d2 / h**4 + 3.0 * d1**2 / h**5


def _p_asymptotic(spec, x):
    h, d1, d2 = spec.h(x), spec.dh(x), spec.d2h(x)
    return 1.0 / h + d1 / h**3 - d2 / h**4 + 3.0 * d1**2 / h**5


class RightKernel:
    """K(x) on [0, inf) via H-adapted panels and a backward recursion."""

    def __init__(self, spec, max_dH=MAX_DH):
        self.spec = spec
        self.x_tail = tail_cutoff(spec)
        self.faces = adapted_faces(spec, 0.0, self.x_tail, max_dH=max_dH)
        H = spec.H(self.faces)
        a, b = self.faces[:-1], self.faces[1:]
        Ha = H[:-1]
        inner = gl_integrate(lambda y: np.exp(-(spec.H(y) - Ha[:, None])), a, b)
        decay = np.exp(-(H[1:] - H[:-1]))
        K = np.empty(len(self.faces))
        K[-1] = float(_k_asymptotic(spec, np.float64(self.x_tail)))
        for k in range(len(a) - 1, -1, -1):
            K[k] = inner[k] + decay[k] * K[k + 1]
        self.face_values = K
        self._H_faces = H

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0.0):
            raise ValueError("right kernel is defined on [0, inf)")
        out = np.empty_like(x)
        tail = x >= self.x_tail
        if np.any(tail):
            out[tail] = _k_asymptotic(self.spec, x[tail])
        xi = x[~tail]
        if xi.size:
            k = np.clip(np.searchsorted(self.faces, xi, side="right") - 1, 0, len(self.faces) - 2)
            b = self.faces[k + 1]
            Hx = self.spec.H(xi)
            part = gl_integrate(lambda y: np.exp(-(self.spec.H(y) - Hx[..., None])), xi, b)
            out[~tail] = part + np.exp(-(self._H_faces[k + 1] - Hx)) * self.face_values[k + 1]
        return out

    def integral(self, a, b):
        """int_a^b K, for 0 <= a <= b (b may be inf)."""
        total = 0.0
        hi = min(b, self.x_tail)
        if hi > a:
            faces = np.linspace(a, hi, max(1, int(math.ceil((hi - a) / MAX_WIDTH))) + 1)
            x, w = gl_nodes(faces[:-1], faces[1:])
            total += float(np.sum(self(x) * w))
        lo = max(a, self.x_tail)
        if b > lo:
            total += self.tail_integral(lo) - (self.tail_integral(b) if np.isfinite(b) else 0.0)
        return total

    def tail_integral(self, x):
        """int_x^inf K for x >= x_tail, from the asymptotic series."""
        spec = self.spec
        h, d1 = float(spec.h(x)), float(spec.dh(x))
        return float(spec.inv_h_tail(x)) - 1.0 / (2.0 * h * h) + d1 / h**4


class LeftKernel:
    """P(x) on the whole line: closed form left of x0, forward recursion on
    H-adapted panels up to the asymptotic cutoff."""

    def __init__(self, spec, max_dH=MAX_DH):
        self.spec = spec
        self.x_tail = tail_cutoff(spec)
        self.faces = adapted_faces(spec, spec.x0, self.x_tail, max_dH=max_dH)
        H = spec.H(self.faces)
        a, b = self.faces[:-1], self.faces[1:]
        Hb = H[1:]
        inner = gl_integrate(lambda y: np.exp(-(Hb[:, None] - spec.H(y))), a, b)
        decay = np.exp(-(H[1:] - H[:-1]))
        P = np.empty(len(self.faces))
        P[0] = float(self._gaussian(np.float64(spec.x0)))
        for k in range(len(a)):
            P[k + 1] = decay[k] * P[k] + inner[k]
        self.face_values = P
        self._H_faces = H

    def _gaussian(self, x):
        z = (np.asarray(x, dtype=float) - self.spec.h0) / math.sqrt(2.0)
        return math.sqrt(math.pi / 2.0) * special.erfcx(-z)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        left = x <= self.spec.x0
        tail = x >= self.x_tail
        mid = ~(left | tail)
        if np.any(left):
            out[left] = self._gaussian(x[left])
        if np.any(tail):
            out[tail] = _p_asymptotic(self.spec, x[tail])
        xi = x[mid]
        if xi.size:
            k = np.clip(np.searchsorted(self.faces, xi, side="right") - 1, 0, len(self.faces) - 2)
            a = self.faces[k]
            Hx = self.spec.H(xi)
            part = gl_integrate(lambda y: np.exp(-(Hx[..., None] - self.spec.H(y))), a, xi)
            out[mid] = part + np.exp(-(Hx - self._H_faces[k])) * self.face_values[k]
        return out

    def tail_integral(self, x):
        """int_x^inf P for x >= x_tail, from the asymptotic series."""
        h = float(self.spec.h(x))
        return float(self.spec.inv_h_tail(x)) + 1.0 / (2.0 * h * h)


def gaussian_left_mass(spec, x):
    """int_-inf^x exp(H(y)) dy for x <= x0, in closed form."""
    if x > spec.x0:
        raise ValueError("closed form holds for x <= x0 only")
    log_pref = spec.h1 + 0.5 * spec.h0**2 + 0.5 * math.log(2.0 * math.pi)
    return math.exp(log_pref + special.log_ndtr(x - spec.h0))


def exp_H_integral(spec, a, b):
    """int_a^b exp(H(y)) dy for a <= b <= 0 (a may be -inf)."""
    total = 0.0
    if a < spec.x0:
        hi = min(b, spec.x0)
        total += gaussian_left_mass(spec, hi) - (gaussian_left_mass(spec, a) if np.isfinite(a) else 0.0)
    lo = max(a, spec.x0)
    if b > lo:
        faces = np.linspace(lo, b, max(1, int(math.ceil((b - lo) / MAX_WIDTH))) + 1)
        total += float(np.sum(gl_integrate(lambda y: np.exp(spec.H(y)), faces[:-1], faces[1:])))
    return total
