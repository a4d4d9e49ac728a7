"""Two-dimensional electromagnetics ``grad_perp(mu^-1 rot E) + c eps E = J``.

``A = rot`` and ``A* = grad_perp``; ``alpha1 = eps`` (``sigma`` in the eddy
current case ``c = i omega``) and ``alpha2 = 1/mu``.  ``E`` lives in the
rotated RT0 space with vanishing tangential trace on D edges and
``H = mu^-1 rot E`` in P1 vanishing on N edges.
"""
from __future__ import annotations

import numpy as np

from ..report import CheckReport
from .mixed import DEFAULT_QUAD, Coefficients, MixedFEM, local_form
from .rd import bound_report
from .spaces import (
    AnalyticScalar,
    AnalyticVector,
    Points,
    Q,
    assemble,
    interpolate_p1,
    interpolate_rotated,
    volume_points,
)

PAIRING_TOL = 1e-12


def em_fem(mesh):
    fem = MixedFEM("em", mesh)
    # the boundary roles are exchanged with respect to reaction-diffusion
    assert fem.primal_space.constrained_tag == "D" and fem.dual_space.constrained_tag == "N"
    return fem


def coefficients(mesh, manufactured):
    return Coefficients.constant(mesh.n_triangles, manufactured.alpha1, manufactured.alpha2, manufactured.omega)


def exact_fields(manufactured):
    fl = manufactured.fields
    e = AnalyticVector(fl["E"], rot=fl["rot_E"])
    # grad H = -Q grad_perp H, i.e. the row vector grad_perp_H @ Q
    h = AnalyticScalar(fl["H"], lambda x, y: fl["grad_perp_H"](x, y) @ Q)
    return e, h, AnalyticVector(fl["J"])


def solve_em(mesh, coeff, J, quad_degree=DEFAULT_QUAD):
    """Galerkin ``(E_h, H_h)``: primal in rotated RT0, dual in P1."""
    fem = em_fem(mesh)
    return fem.solve_primal(coeff, J, quad_degree), fem.solve_dual(coeff, J, quad_degree)


def interpolate(mesh, manufactured, degree=6):
    fem = em_fem(mesh)
    e_i = interpolate_rotated(fem.primal_space, manufactured.fields["E"], degree)
    h_i = interpolate_p1(fem.dual_space, manufactured.fields["H"])
    return e_i, h_i


def majorant_em(mesh, coeff, manufactured, e_t, h_t, quad_degree=DEFAULT_QUAD):
    """``(MajorantBreakdown, CombinedNorms, IndicatorField)`` of ``(e_t, h_t)``."""
    e, h, j = exact_fields(manufactured)
    return em_fem(mesh).evaluate(coeff, j, e_t, h_t, exact=(e, h), quad_degree=quad_degree,
                                 data_degree=manufactured.degree)


def check(mesh, manufactured, quad_degree=DEFAULT_QUAD, approximation="interpolant", tol=None):
    if approximation == "interpolant":
        e_t, h_t = interpolate(mesh, manufactured)
    else:
        _, _, j = exact_fields(manufactured)
        e_t, h_t = solve_em(mesh, coefficients(mesh, manufactured), j, quad_degree)
    brk, norms, ind = majorant_em(mesh, coefficients(mesh, manufactured), manufactured, e_t, h_t, quad_degree)
    return bound_report(f"fem-{manufactured.name}", manufactured.mode, brk, norms, ind, tol)


def pairing_matrices(mesh):
    """``B[i, j] = <rot Phi_j, psi_i>`` and ``C[i, j] = <Phi_j, grad_perp psi_i>`` on free dofs."""
    fem = em_fem(mesh)
    pts, w = volume_points(mesh, 2)
    phi, rot_phi = fem.primal_basis(pts)
    psi, gp_psi = fem.dual_basis(pts)
    ones = np.ones(mesh.n_triangles)
    b = assemble(fem.primal_space, fem.dual_space, local_form(w, psi, rot_phi, ones))
    c = assemble(fem.primal_space, fem.dual_space, local_form(w, gp_psi, phi, ones))
    rows, cols = fem.dual_space.free, fem.primal_space.free
    return b[rows][:, cols], c[rows][:, cols]


def duality_pairing_check(mesh, rng, trials=20, tol=PAIRING_TOL):
    """Discrete integration by parts ``<rot Phi, psi> = <Phi, grad_perp psi>``."""
    b, c = pairing_matrices(mesh)
    scale = max(abs(b).max(), 1.0)
    mat_defect = abs(b - c).max() / scale if b.nnz or c.nnz else 0.0
    worst = 0.0
    for _ in range(trials):
        phi = rng.standard_normal(b.shape[1]) + 1j * rng.standard_normal(b.shape[1])
        psi = rng.standard_normal(b.shape[0]) + 1j * rng.standard_normal(b.shape[0])
        lhs = np.vdot(psi, b @ phi)
        rhs = np.vdot(psi, c @ phi)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    rep = CheckReport("em-duality-pairing", True, {"matrix_defect": mat_defect, "random_defect": worst})
    if mat_defect > tol or worst > tol:
        rep.fail(f"pairing defect {max(mat_defect, worst):.3e} exceeds {tol:g}")
    return rep


def rotation_identity_check(mesh, rng, tol=PAIRING_TOL):
    """``rot E`` as the divergence of ``Q E`` against the direct formula, on random dofs."""
    fem = em_fem(mesh)
    e = fem.primal_function(fem.primal_space.expand(rng.standard_normal(fem.primal_space.n_dofs)))
    pts = Points(np.arange(mesh.n_triangles), np.broadcast_to(np.full(3, 1 / 3), (mesh.n_triangles, 1, 3)))
    via_div = e.rot(mesh, pts)
    direct = e.rot_direct(mesh, pts)
    scale = max(np.abs(via_div).max(), 1.0)
    defect = float(np.abs(via_div - direct).max() / scale)
    rep = CheckReport("em-rotation-identity", True, {"defect": defect})
    if defect > tol:
        rep.fail(f"rotation identity defect {defect:.3e} exceeds {tol:g}")
    return rep
