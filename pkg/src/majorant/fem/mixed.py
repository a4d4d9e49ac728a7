"""Shared machinery for mixed problems ``A* alpha2 A x + c alpha1 x = f`` on triangles.

Two discretizations are provided:

* reaction-diffusion: ``A = grad``, ``x = u`` in P1, ``y = p`` in RT0,
  ``alpha1 = rho``, ``alpha2 = alpha``;
* 2D electromagnetics: ``A = rot``, ``x = E`` in rotated RT0, ``y = H`` in
  P1, ``alpha1 = eps`` (or ``sigma``), ``alpha2 = 1/mu``.

Coefficients are piecewise constant, either scalars ``(n_elem,)`` or
symmetric matrices ``(n_elem, 2, 2)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..abstract import LOWER_FACTOR, UPPER_FACTOR, CombinedNorms, MajorantBreakdown
from ..estimator import IndicatorField
from ..linalg import solve_general, solve_hpd
from .spaces import (
    Q,
    P1Function,
    P1Space,
    RotatedRT0Function,
    RT0Function,
    RT0Space,
    assemble,
    assemble_vector,
    volume_points,
)

DEFAULT_QUAD = 6


class QuadratureDegreeWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class Coefficients:
    """Piecewise constant ``alpha1``, ``alpha2`` and the optional frequency ``omega``."""

    alpha1: np.ndarray
    alpha2: np.ndarray
    omega: float | None = None

    def __post_init__(self):
        for name in ("alpha1", "alpha2"):
            a = np.array(getattr(self, name), dtype=float)
            if a.ndim == 1:
                if np.any(a <= 0):
                    raise ValueError(f"{name} must be positive")
            elif a.ndim == 3 and a.shape[1:] == (2, 2):
                if np.abs(a - a.transpose(0, 2, 1)).max() > 1e-12 * np.abs(a).max():
                    raise ValueError(f"{name} must be symmetric")
                if np.any(np.linalg.eigvalsh(a)[:, 0] <= 0):
                    raise ValueError(f"{name} must be positive definite")
            else:
                raise ValueError(f"{name} must have shape (n,) or (n, 2, 2)")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.alpha1.shape[0] != self.alpha2.shape[0]:
            raise ValueError("coefficient arrays differ in length")
        if self.omega is not None:
            if self.omega == 0 or not math.isfinite(self.omega):
                raise ValueError("omega must be a nonzero real number")
            object.__setattr__(self, "omega", float(self.omega))

    @classmethod
    def constant(cls, n_elem, alpha1, alpha2, omega=None):
        def spread(a):
            a = np.asarray(a, dtype=float)
            return np.broadcast_to(a, (n_elem,) + a.shape).copy()

        return cls(spread(alpha1), spread(alpha2), omega)

    @property
    def mode(self):
        return "I" if self.omega is None else "II"

    @property
    def reaction(self):
        return 1.0 if self.omega is None else 1j * self.omega

    def primal_weight(self):
        """``alpha1`` in Case I, ``|omega| alpha1`` in Case II."""
        return self.alpha1 if self.omega is None else abs(self.omega) * self.alpha1

    def restrict(self, elems):
        return Coefficients(self.alpha1[elems], self.alpha2[elems], self.omega)


def inverse(c):
    return 1.0 / c if c.ndim == 1 else np.linalg.inv(c)


def weighted_sq(v, c):
    """Pointwise ``conj(v) . c v`` for scalar or vector samples ``v`` of shape ``(E, Q[, 2])``."""
    if v.ndim == 2:
        if c.ndim != 1:
            raise ValueError("scalar field needs a scalar coefficient")
        return c[:, None] * np.abs(v) ** 2
    if c.ndim == 1:
        return c[:, None] * np.sum(np.abs(v) ** 2, axis=-1)
    cv = np.einsum("ecd,eqd->eqc", c, v)
    return np.einsum("eqc,eqc->eq", v.conj(), cv).real


def local_form(w, bi, bj, c):
    """Local matrices ``(E, 3, 3)`` of ``int c b_j . b_i`` (test ``i``, trial ``j``)."""
    if bi.ndim == 3:
        return np.einsum("eq,eqi,eqj->eij", w * c[:, None], bi, bj)
    if c.ndim == 1:
        return np.einsum("eq,eqid,eqjd->eij", w * c[:, None], bi, bj)
    return np.einsum("eq,eqic,ecd,eqjd->eij", w, bi, c, bj)


def local_load(w, bi, g, c=None):
    """Local vectors ``(E, 3)`` of ``int c g . b_i``."""
    if c is not None:
        g = c[:, None] * g if c.ndim == 1 else np.einsum("ecd,eqd->eqc", c, g)
    if bi.ndim == 3:
        return np.einsum("eq,eqi,eq->ei", w, bi, g)
    return np.einsum("eq,eqid,eqd->ei", w, bi, g)


class MixedFEM:
    """A pair of conforming spaces realizing ``x`` and ``y``, with the operator roles."""

    def __init__(self, kind, mesh):
        self.kind = kind
        self.mesh = mesh
        if kind == "rd":
            self.primal_space = P1Space(mesh, "D")
            self.dual_space = RT0Space(mesh, "N")
        elif kind == "em":
            # tangential E is fixed on D edges, so the P1 space for H is constrained on N
            self.primal_space = RT0Space(mesh, "D")
            self.dual_space = P1Space(mesh, "N")
        else:
            raise ValueError(f"kind must be 'rd' or 'em', got {kind!r}")

    @property
    def n_dofs(self):
        return self.primal_space.n_dofs + self.dual_space.n_dofs

    # basis values and operator images at points
    def primal_basis(self, pts):
        sp = self.primal_space
        if self.kind == "rd":
            vals, grads = sp.basis(pts)
            return vals, np.broadcast_to(grads[:, None], vals.shape + (2,))
        vals, div = sp.basis(pts)
        return vals @ Q, np.broadcast_to(div[:, None], vals.shape[:3])

    def dual_basis(self, pts):
        sp = self.dual_space
        if self.kind == "rd":
            vals, div = sp.basis(pts)
            return vals, np.broadcast_to(-div[:, None], vals.shape[:3])
        vals, grads = sp.basis(pts)
        return vals, np.broadcast_to((grads @ Q.T)[:, None], vals.shape + (2,))

    def primal_function(self, coeffs):
        if self.kind == "rd":
            return P1Function(self.primal_space, coeffs)
        return RotatedRT0Function(self.primal_space, coeffs)

    def dual_function(self, coeffs):
        if self.kind == "rd":
            return RT0Function(self.dual_space, coeffs)
        return P1Function(self.dual_space, coeffs)

    def sample_primal(self, fn, pts):
        """``(x, A x)`` at points."""
        m = self.mesh
        if self.kind == "rd":
            return fn.value(m, pts), fn.grad(m, pts)
        return fn.value(m, pts), fn.rot(m, pts)

    def sample_dual(self, fn, pts):
        """``(y, A* y)`` at points."""
        m = self.mesh
        if self.kind == "rd":
            return fn.value(m, pts), -fn.div(m, pts)
        return fn.value(m, pts), fn.grad_perp(m, pts)

    def assemble_primal(self, coeff, f, quad_degree=DEFAULT_QUAD):
        """System matrix and load of ``<A x, A phi>_alpha2 + c <x, phi>_alpha1 = <f, phi>``."""
        pts, w = volume_points(self.mesh, quad_degree)
        b, ab = self.primal_basis(pts)
        k = local_form(w, ab, ab, coeff.alpha2) + coeff.reaction * local_form(w, b, b, coeff.alpha1)
        sp_ = self.primal_space
        mat = assemble(sp_, sp_, k)
        rhs = assemble_vector(sp_, local_load(w, b, f.value(self.mesh, pts)))
        return mat, rhs

    def assemble_dual(self, coeff, f, quad_degree=DEFAULT_QUAD):
        """System matrix and load of the dual problem.

        Case I: ``<A* y, A* psi>_{alpha1^-1} + <y, psi>_{alpha2^-1} = <f, A* psi>_{alpha1^-1}``.
        Case II replaces ``alpha1`` by ``omega alpha1`` and multiplies the second term by ``i``.
        """
        pts, w = volume_points(self.mesh, quad_degree)
        b, asb = self.dual_basis(pts)
        scale = 1.0 if coeff.omega is None else coeff.omega
        a1inv = inverse(coeff.alpha1) / scale
        zeroth = 1.0 if coeff.omega is None else 1j
        k = local_form(w, asb, asb, a1inv) + zeroth * local_form(w, b, b, inverse(coeff.alpha2))
        sp_ = self.dual_space
        mat = assemble(sp_, sp_, k)
        rhs = assemble_vector(sp_, local_load(w, asb, f.value(self.mesh, pts), a1inv))
        return mat, rhs

    def _solve(self, space, mat, rhs, hermitian):
        free = space.free
        a = mat[free][:, free]
        b = rhs[free]
        if hermitian:
            sol = solve_hpd(a, b)
        else:
            sol = solve_general(a.astype(complex), b.astype(complex))
        return space.expand(sol)

    def solve_primal(self, coeff, f, quad_degree=DEFAULT_QUAD):
        mat, rhs = self.assemble_primal(coeff, f, quad_degree)
        c = self._solve(self.primal_space, mat, rhs, coeff.omega is None)
        return self.primal_function(c)

    def solve_dual(self, coeff, f, quad_degree=DEFAULT_QUAD):
        mat, rhs = self.assemble_dual(coeff, f, quad_degree)
        c = self._solve(self.dual_space, mat, rhs, coeff.omega is None)
        return self.dual_function(c)

    def evaluate(self, coeff, f, x_t, y_t, exact=None, quad_degree=DEFAULT_QUAD, data_degree=None):
        """Majorant, combined error and element indicators of ``(x_t, y_t)``.

        Parameters
        ----------
        f : field
            Right-hand side with a ``value(mesh, pts)`` method.
        exact : tuple of fields, optional
            ``(x, y)`` exact solution; enables the error terms.
        data_degree : int, optional
            Polynomial degree of the data and exact solution.  A warning is
            issued when ``quad_degree`` cannot integrate the squared terms exactly.

        Returns
        -------
        (MajorantBreakdown, CombinedNorms or None, IndicatorField)
        """
        if data_degree is not None and quad_degree < 2 * max(data_degree, 1):
            warnings.warn(
                f"quadrature degree {quad_degree} is below {2 * max(data_degree, 1)}; "
                "the computed terms are only approximate",
                QuadratureDegreeWarning,
                stacklevel=2,
            )
        mesh = self.mesh
        pts, w = volume_points(mesh, quad_degree)
        w1 = coeff.primal_weight()
        a2 = coeff.alpha2
        xv, axv = self.sample_primal(x_t, pts)
        yv, asyv = self.sample_dual(y_t, pts)
        fv = f.value(mesh, pts)
        cx = _apply(coeff.alpha1, xv) * coeff.reaction
        r_eq = np.sum(w * weighted_sq(fv - cx - asyv, inverse(w1)), axis=1)
        r_fl = np.sum(w * weighted_sq(yv - _apply(a2, axv), inverse(a2)), axis=1)
        eta_sq = r_eq + r_fl
        total = math.fsum(eta_sq)
        lo, hi = (LOWER_FACTOR * total, UPPER_FACTOR * total) if coeff.omega is not None else (total, total)
        norms = None
        e_sq = None
        eff = None
        if exact is not None:
            xe, axe = self.sample_primal(exact[0], pts)
            ye, asye = self.sample_dual(exact[1], pts)
            ex = np.sum(w * weighted_sq(xe - xv, w1), axis=1)
            eax = np.sum(w * weighted_sq(axe - axv, a2), axis=1)
            ey = np.sum(w * weighted_sq(ye - yv, inverse(a2)), axis=1)
            easy = np.sum(w * weighted_sq(asye - asyv, inverse(w1)), axis=1)
            e_sq = ex + eax + ey + easy
            norms = CombinedNorms(math.fsum(ex) + math.fsum(eax), math.fsum(ey) + math.fsum(easy))
            e2 = norms.total_sq
            eff = total / e2 if e2 > 0 else math.nan
        breakdown = MajorantBreakdown(math.fsum(r_eq), math.fsum(r_fl), lo, hi, eff)
        return breakdown, norms, IndicatorField(eta_sq, e_sq)


def _apply(c, v):
    if v.ndim == 2:
        return c[:, None] * v
    if c.ndim == 1:
        return c[:, None, None] * v
    return np.einsum("ecd,eqd->eqc", c, v)
