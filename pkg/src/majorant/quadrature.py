"""Quadrature on the reference triangle and the unit interval."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@lru_cache(maxsize=None)
def triangle_rule(degree):
    """Rule exact for polynomials of total degree ``degree`` on the reference triangle.

    Built by collapsing a Gauss-Jacobi x Gauss-Legendre tensor rule onto
    the triangle, so every degree is available.  Weights sum to the area 1/2.

    Returns
    -------
    bary : ndarray, shape (q, 3)
        Barycentric coordinates of the points.
    weights : ndarray, shape (q,)
    """
    if degree < 0:
        raise ValueError("degree must be non-negative")
    n = max(1, -(-(degree + 1) // 2))
    # s carries the Jacobian (1 - s) of the collapse
    s, ws = roots_jacobi(n, 1.0, 0.0)
    t, wt = roots_legendre(n)
    s = 0.5 * (s + 1.0)
    ws = ws / 4.0
    t = 0.5 * (t + 1.0)
    wt = wt / 2.0
    S, T = np.meshgrid(s, t, indexing="ij")
    x = S.ravel()
    y = ((1.0 - S) * T).ravel()
    w = np.outer(ws, wt).ravel()
    bary = np.stack([1.0 - x - y, x, y], axis=1)
    bary.setflags(write=False)
    w.setflags(write=False)
    return bary, w


@lru_cache(maxsize=None)
def line_rule(degree):
    """Gauss rule on [0, 1] with ``ceil((degree + 2) / 2)`` points.

    Returns points ``t`` and weights summing to 1.
    """
    if degree < 0:
        raise ValueError("degree must be non-negative")
    n = max(1, -(-(degree + 2) // 2))
    t, w = roots_legendre(n)
    t = 0.5 * (t + 1.0)
    w = w / 2.0
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w
