"""Fixed-order Gauss-Legendre panel quadrature, vectorised over panels."""

from __future__ import annotations

import numpy as np

_ORDER = 16
_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(_ORDER)


def gl_nodes(a, b, order=_ORDER):
    """Nodes and weights of a Gauss-Legendre rule on each interval [a, b].

    ``a`` and ``b`` broadcast together; the returned arrays carry one extra
    trailing axis of length ``order``.
    """
    if order == _ORDER:
        t, w = _NODES, _WEIGHTS
    else:
        t, w = np.polynomial.legendre.leggauss(order)
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    half = 0.5 * (b - a)
    return a + half * (t + 1.0), half * w


def gl_integrate(f, a, b, order=_ORDER):
    """Integrate the vectorised callable ``f`` over each interval [a, b]."""
    x, w = gl_nodes(a, b, order)
    return np.sum(f(x) * w, axis=-1)


def panel_faces(a, b, width):
    """Uniform panel faces covering [a, b] with spacing at most ``width``."""
    n = max(1, int(np.ceil((b - a) / width)))
    return np.linspace(a, b, n + 1)


def integrate_panels(f, faces, order=_ORDER):
    """Per-panel integrals of ``f`` over consecutive ``faces``."""
    faces = np.asarray(faces, dtype=float)
    return gl_integrate(f, faces[:-1], faces[1:], order)
