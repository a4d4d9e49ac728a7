"""Reaction-diffusion ``-div(alpha grad u) + c rho u = f`` with P1 primal and RT0 dual approximations.

Here ``A = grad`` and ``A* = -div``; ``alpha1 = rho`` and ``alpha2 = alpha``.
Case II uses ``c = i omega``.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..estimator import efficiency_report
from ..report import CheckReport
from .mixed import DEFAULT_QUAD, Coefficients, MixedFEM
from .spaces import AnalyticScalar, AnalyticVector, interpolate_p1, interpolate_rt0


def coefficients(mesh, manufactured):
    """Per-element coefficients of a catalog entry."""
    return Coefficients.constant(mesh.n_triangles, manufactured.alpha1, manufactured.alpha2, manufactured.omega)


def exact_fields(manufactured):
    fl = manufactured.fields
    u = AnalyticScalar(fl["u"], fl["grad_u"])
    p = AnalyticVector(fl["p"], div=fl["div_p"])
    return u, p, AnalyticScalar(fl["f"])


@dataclass(frozen=True, eq=False)
class RDCoefficients:
    """Diffusion ``alpha`` (2x2 per element), reaction ``rho`` (per element) and optional ``omega``."""

    alpha: object
    rho: object
    omega: float | None = None

    def mixed(self):
        return Coefficients(self.rho, self.alpha, self.omega)


def _as_mixed(coeff):
    return coeff.mixed() if isinstance(coeff, RDCoefficients) else coeff


def assemble_solve_primal(mesh, coeff, f, quad_degree=DEFAULT_QUAD):
    """Galerkin solution in P1 vanishing on D edges."""
    return MixedFEM("rd", mesh).solve_primal(_as_mixed(coeff), f, quad_degree)


def solve_dual_rt0(mesh, coeff, f, quad_degree=DEFAULT_QUAD):
    """Galerkin solution of the flux problem in RT0 with zero flux on N edges."""
    return MixedFEM("rd", mesh).solve_dual(_as_mixed(coeff), f, quad_degree)


def interpolate(mesh, manufactured, degree=6):
    """Canonical interpolants ``(u_I, p_I)`` of the exact solution."""
    fem = MixedFEM("rd", mesh)
    u_i = interpolate_p1(fem.primal_space, manufactured.fields["u"])
    p_i = interpolate_rt0(fem.dual_space, manufactured.fields["p"], degree)
    return u_i, p_i


def majorant_and_error(mesh, coeff, manufactured, u_t, p_t, quad_degree=DEFAULT_QUAD):
    """``(MajorantBreakdown, CombinedNorms, IndicatorField)`` of the pair ``(u_t, p_t)``."""
    u, p, f = exact_fields(manufactured)
    fem = MixedFEM("rd", mesh)
    return fem.evaluate(_as_mixed(coeff), f, u_t, p_t, exact=(u, p),
                        quad_degree=quad_degree, data_degree=manufactured.degree)


def galerkin_pair(mesh, manufactured, quad_degree=DEFAULT_QUAD):
    coeff = coefficients(mesh, manufactured)
    _, _, f = exact_fields(manufactured)
    fem = MixedFEM("rd", mesh)
    return fem.solve_primal(coeff, f, quad_degree), fem.solve_dual(coeff, f, quad_degree)


def driver(manufactured, quad_degree=10, approximation="galerkin"):
    """Adaptive-loop driver: ``mesh -> (IndicatorField, n_dofs)``.

    ``approximation`` is ``"galerkin"`` (both Galerkin solutions) or
    ``"interpolant"`` (canonical interpolants of the exact solution).
    """
    if approximation not in ("galerkin", "interpolant"):
        raise ValueError("approximation must be 'galerkin' or 'interpolant'")

    def run(mesh):
        if approximation == "galerkin":
            u_t, p_t = galerkin_pair(mesh, manufactured, quad_degree)
        else:
            u_t, p_t = interpolate(mesh, manufactured)
        coeff = coefficients(mesh, manufactured)
        _, _, ind = majorant_and_error(mesh, coeff, manufactured, u_t, p_t, quad_degree)
        return ind, MixedFEM("rd", mesh).n_dofs

    return run


def check(mesh, manufactured, quad_degree=DEFAULT_QUAD, approximation="interpolant", tol=None):
    """Equality (Case I) or two-sided bound (Case II) check with efficiency report."""
    if approximation == "interpolant":
        u_t, p_t = interpolate(mesh, manufactured)
    else:
        u_t, p_t = galerkin_pair(mesh, manufactured, quad_degree)
    coeff = coefficients(mesh, manufactured)
    brk, norms, ind = majorant_and_error(mesh, coeff, manufactured, u_t, p_t, quad_degree)
    return bound_report(f"fem-{manufactured.name}", manufactured.mode, brk, norms, ind, tol)


def bound_report(name, mode, brk, norms, ind, tol=None):
    """Check ``M = e^2`` (Case I) or the two-sided bound (Case II) plus the efficiency constants."""
    if tol is None:
        tol = 1e-9
    e2 = norms.total_sq
    rep = CheckReport(name, True, {
        "mode": mode, "majorant": brk.total, "error_sq": e2,
        "lower_bound": brk.lower_bound, "upper_bound": brk.upper_bound,
        "n_elements": len(ind),
    })
    if mode == "I":
        rel = abs(brk.total - e2) / e2 if e2 > 0 else abs(brk.total)
        rep.values["relative_deviation"] = rel
        if rel > tol:
            rep.fail(f"|M - e^2| / e^2 = {rel:.3e} exceeds {tol:g}")
    else:
        if not brk.lower_bound <= e2 * (1 + tol) or not e2 <= brk.upper_bound * (1 + tol):
            rep.fail(f"e^2 = {e2!r} outside [{brk.lower_bound!r}, {brk.upper_bound!r}]")
    eff = efficiency_report(ind, mode, tol=max(tol, 1e-8))
    rep.values["efficiency"] = eff.ratio
    rep.values["local_min"] = eff.local_min
    if not eff.check.passed:
        for msg in eff.check.failures:
            rep.fail(msg)
    return rep
