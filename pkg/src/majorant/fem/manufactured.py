"""Catalog of closed-form solutions on the unit square.

Reaction-diffusion entries (``rd-*``) solve ``-div(alpha grad u) + c rho u = f``
and electromagnetic entries (``em-*``) solve
``grad_perp(mu^-1 rot E) + c eps E = J`` with ``c = 1`` (Case I) or
``c = i omega`` (Case II).  Data are derived symbolically, so ``f`` and
``J`` are consistent with the chosen solution by construction.

===========  =================================================  ===========
name         solution                                           boundary
===========  =================================================  ===========
rd-poly2     u = x(1-x)                                         D on x=0,1
rd-poly4     u = x(1-x)y(1-y)                                   all D
rd-sin       u = sin(pi x) sin(pi y)                            all D
rd-layer     u = 16x(1-x)y(1-y)(1/2 + atan(k(r0^2 - r^2))/pi)   all D
em-poly      E = (y(1-y), x(1-x))                               all D
em-sin       E = (sin(pi y), sin(pi x))                         all D
===========  =================================================  ===========

In ``rd-layer`` ``r`` is the distance to (1/2, 1/2), ``r0 = 1/4`` and
``k = LAYER_STEEPNESS``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy as sp

from ..mesh import build_rectangle, side_tags

LAYER_STEEPNESS = 60.0
LAYER_RADIUS = 0.25

_x, _y = sp.symbols("x y", real=True)
X, Y = _x, _y  # symbols for building custom entries


def _lambdify(expr, complex_out):
    fn = sp.lambdify((_x, _y), expr, modules="numpy")
    dtype = complex if complex_out else float

    def wrapped(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.broadcast_to(np.asarray(fn(x, y), dtype=dtype), np.broadcast(x, y).shape)

    return wrapped


def _lambdify_vec(exprs, complex_out):
    parts = [_lambdify(e, complex_out) for e in exprs]

    def wrapped(x, y):
        return np.stack([p(x, y) for p in parts], axis=-1)

    return wrapped


@dataclass(frozen=True, eq=False)
class Manufactured:
    """A manufactured solution with its coefficients, data and boundary tags.

    ``fields`` maps role names to vectorized callables ``(x, y) -> array``.
    Reaction-diffusion roles: ``u, grad_u, p, div_p, f``.
    Electromagnetic roles: ``E, rot_E, H, grad_perp_H, J``.
    ``alpha1`` and ``alpha2`` carry the abstract roles: ``(rho, alpha)``
    for reaction-diffusion and ``(eps, 1/mu)`` for electromagnetics.
    """

    name: str
    kind: str
    mode: str
    omega: float | None
    alpha1: np.ndarray
    alpha2: np.ndarray
    tags: tuple
    degree: int | None
    fields: dict = field(repr=False)
    exprs: dict = field(repr=False)

    def mesh(self, n):
        """Structured ``n x n`` mesh with this entry's boundary tags."""
        return build_rectangle(n, n, side_tags(*self.tags))

    def reaction(self):
        return 1.0 if self.omega is None else 1j * self.omega


def _mode(omega):
    if omega is None:
        return "I"
    if omega == 0:
        raise ValueError("omega must be nonzero")
    return "II"


def _rd(name, u, alpha, rho, tags, degree, omega):
    a = sp.Matrix(alpha)
    grad = sp.Matrix([sp.diff(u, _x), sp.diff(u, _y)])
    p = a * grad
    div_p = sp.diff(p[0], _x) + sp.diff(p[1], _y)
    c = 1 if omega is None else sp.I * sp.nsimplify(omega)
    f = sp.expand(-div_p) + c * rho * u
    cplx = omega is not None
    exprs = {"u": u, "grad_u": list(grad), "p": list(p), "div_p": div_p, "f": f}
    fields = {
        "u": _lambdify(u, False),
        "grad_u": _lambdify_vec(list(grad), False),
        "p": _lambdify_vec(list(p), False),
        "div_p": _lambdify(div_p, False),
        "f": _lambdify(f, cplx),
    }
    # abstract roles: alpha1 = rho, alpha2 = alpha
    return Manufactured(name, "rd", _mode(omega), omega, np.array(rho, dtype=float),
                        np.array(alpha, dtype=float), tags, degree, fields, exprs)


def _em(name, e, eps, mu, tags, degree, omega):
    e = sp.Matrix(e)
    rot = sp.diff(e[1], _x) - sp.diff(e[0], _y)
    h = rot / mu
    gp = sp.Matrix([sp.diff(h, _y), -sp.diff(h, _x)])
    c = 1 if omega is None else sp.I * sp.nsimplify(omega)
    j = gp + c * sp.Matrix(eps) * e
    cplx = omega is not None
    exprs = {"E": list(e), "rot_E": rot, "H": h, "grad_perp_H": list(gp), "J": list(j)}
    fields = {
        "E": _lambdify_vec(list(e), False),
        "rot_E": _lambdify(rot, False),
        "H": _lambdify(h, False),
        "grad_perp_H": _lambdify_vec(list(gp), False),
        "J": _lambdify_vec(list(j), cplx),
    }
    # alpha2 = mu^-1 in the abstract setting
    return Manufactured(name, "em", _mode(omega), omega, np.array(eps, dtype=float),
                        np.array(1.0 / mu, dtype=float), tags, degree, fields, exprs)


def _layer():
    r2 = (_x - sp.Rational(1, 2)) ** 2 + (_y - sp.Rational(1, 2)) ** 2
    k = sp.Float(LAYER_STEEPNESS)
    return 16 * _x * (1 - _x) * _y * (1 - _y) * (sp.Rational(1, 2) + sp.atan(k * (sp.Float(LAYER_RADIUS) ** 2 - r2)) / sp.pi)


_ANISO = [[1.5, 0.5], [0.5, 1.0]]

_BUILDERS = {
    "rd-poly2": lambda w: _rd("rd-poly2", _x * (1 - _x), [[2, 0], [0, 1]], sp.Rational(3, 2), ("D", "D", "N", "N"), 2, w),
    "rd-poly4": lambda w: _rd("rd-poly4", _x * (1 - _x) * _y * (1 - _y), _ANISO, 2, ("D",) * 4, 4, w),
    "rd-sin": lambda w: _rd("rd-sin", sp.sin(sp.pi * _x) * sp.sin(sp.pi * _y), [[1, 0], [0, 1]], 1, ("D",) * 4, None, w),
    "rd-layer": lambda w: _rd("rd-layer", _layer(), [[1, 0], [0, 1]], 1, ("D",) * 4, None, w),
    "em-poly": lambda w: _em("em-poly", [_y * (1 - _y), _x * (1 - _x)], [[2, 0.5], [0.5, 1]], sp.Rational(3, 2), ("D",) * 4, 2, w),
    "em-sin": lambda w: _em("em-sin", [sp.sin(sp.pi * _y), sp.sin(sp.pi * _x)], [[1, 0], [0, 1]], 1, ("D",) * 4, None, w),
}

CATALOG = tuple(_BUILDERS)


def reaction_diffusion(name, u, alpha, rho, tags=("D",) * 4, degree=None, omega=None):
    """Custom entry from a sympy expression ``u`` in :data:`X`, :data:`Y`.

    ``tags`` are the boundary tags of the left, right, bottom and top sides;
    ``degree`` is the polynomial degree of the solution (None otherwise).
    """
    return _rd(name, sp.sympify(u), alpha, rho, tuple(tags), degree, omega)


def electromagnetic(name, e, eps, mu, tags=("D",) * 4, degree=None, omega=None):
    """Custom entry from a pair of sympy expressions ``e = (E_1, E_2)``."""
    return _em(name, [sp.sympify(c) for c in e], eps, mu, tuple(tags), degree, omega)


@lru_cache(maxsize=None)
def get(name, omega=None):
    """Look up a catalog entry; ``omega`` switches to the Case II variant."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise KeyError(f"unknown manufactured solution {name!r}; choose from {', '.join(CATALOG)}") from None
    return builder(None if omega is None else float(omega))
