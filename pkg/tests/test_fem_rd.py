import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from majorant.estimator import theoretical_constants
from majorant.fem import Coefficients, MixedFEM, QuadratureDegreeWarning, manufactured as mf, rd
from majorant.fem.spaces import (
    AnalyticScalar,
    AnalyticVector,
    P1Space,
    RT0Space,
    interpolate_p1,
    interpolate_rt0,
    volume_points,
)
from majorant.mesh import Mesh2D, build_rectangle, refine_uniform, side_tags


def l2_error_sq(mesh, fn_h, fn, degree=8):
    pts, w = volume_points(mesh, degree)
    d = fn_h.value(mesh, pts) - fn.value(mesh, pts)
    return float(np.sum(w * np.abs(d) ** 2)) if d.ndim == 2 else float(np.sum(w[..., None] * np.abs(d) ** 2))


def test_constants_reproduced():
    mesh = build_rectangle(4, 3, side_tags("N", "N", "N", "N"))
    coeff = Coefficients.constant(mesh.n_triangles, 2.0, [[1.5, 0.5], [0.5, 1.0]])
    c = 0.7
    u_h = rd.assemble_solve_primal(mesh, coeff, AnalyticScalar(lambda x, y: 2.0 * c + 0 * x))
    np.testing.assert_allclose(u_h.coeffs, c, rtol=1e-12)


def test_hand_assembled_single_triangle():
    mesh = Mesh2D([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], [[0, 1], [1, 2], [2, 0]], ["N"] * 3).validate()
    alpha = np.diag([2.0, 1.0])
    coeff = Coefficients.constant(1, 3.0, alpha)
    mat, _ = MixedFEM("rd", mesh).assemble_primal(coeff, AnalyticScalar(lambda x, y: 0 * x))
    g = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    stiffness = 0.5 * g @ alpha @ g.T
    mass = (np.ones((3, 3)) + np.eye(3)) / 24
    np.testing.assert_allclose(mat.toarray(), stiffness + 3.0 * mass, rtol=1e-14)


def test_primal_l2_convergence_order_two():
    man = mf.get("rd-poly4")
    u, _, f = rd.exact_fields(man)
    errs = []
    for n in (4, 8, 16, 32):
        mesh = man.mesh(n)
        u_h = rd.assemble_solve_primal(mesh, rd.coefficients(mesh, man), f, quad_degree=8)
        errs.append(math.sqrt(l2_error_sq(mesh, u_h, u)))
    rates = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(r > 1.85 for r in rates), rates


def test_dual_zero_data():
    man = mf.get("rd-poly2")
    mesh = man.mesh(4)
    p_h = rd.solve_dual_rt0(mesh, rd.coefficients(mesh, man), AnalyticScalar(lambda x, y: 0 * x))
    assert np.all(p_h.coeffs == 0)


def test_dual_best_approximation_decreases():
    man = mf.get("rd-sin")
    _, p, _ = rd.exact_fields(man)
    errs = []
    for n in (4, 8, 16):
        _, p_h = rd.galerkin_pair(man.mesh(n), man, 8)
        errs.append(l2_error_sq(man.mesh(n), p_h, p))
    assert errs[0] > errs[1] > errs[2]


def test_majorant_decreases_under_refinement():
    man = mf.get("rd-sin")
    mesh = man.mesh(2)
    vals = []
    for _ in range(4):
        u_h, p_h = rd.galerkin_pair(mesh, man, 8)
        brk, _, _ = rd.majorant_and_error(mesh, rd.coefficients(mesh, man), man, u_h, p_h, 8)
        vals.append(brk.total)
        mesh = refine_uniform(mesh)
    assert all(v >= 0 for v in vals)
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_interpolation_reproduces_constants_and_linears():
    mesh = build_rectangle(3, 3, side_tags("N", "N", "N", "N"))
    u = interpolate_p1(P1Space(mesh, None), lambda x, y: 1 + 2 * x - 3 * y)
    pts, _ = volume_points(mesh, 3)
    xy = pts.xy(mesh)
    np.testing.assert_allclose(u.value(mesh, pts), 1 + 2 * xy[..., 0] - 3 * xy[..., 1], atol=1e-14)
    p = interpolate_rt0(RT0Space(mesh, None), lambda x, y: np.stack([0 * x + 2.0, 0 * x - 0.5], axis=-1))
    vals = p.value(mesh, pts)
    np.testing.assert_allclose(vals[..., 0], 2.0, atol=1e-13)
    np.testing.assert_allclose(vals[..., 1], -0.5, atol=1e-13)


def test_quadratic_interpolation_order_two():
    fn = AnalyticScalar(lambda x, y: x * x + x * y)
    errs = []
    for n in (4, 8, 16):
        mesh = build_rectangle(n, n)
        errs.append(math.sqrt(l2_error_sq(mesh, interpolate_p1(P1Space(mesh, None), fn.fn), fn)))
    assert all(1.9 < math.log2(a / b) < 2.1 for a, b in zip(errs, errs[1:]))


def test_exact_representation_gives_zero():
    # u linear, p = grad u constant, alpha = I, rho = 1, so f = u
    mesh = build_rectangle(3, 3, side_tags("D", "D", "N", "N"))
    fem = MixedFEM("rd", mesh)
    ufn = lambda x, y: 1 + 2 * x + 3 * y  # noqa: E731
    pfn = lambda x, y: np.stack([0 * x + 2.0, 0 * x + 3.0], axis=-1)  # noqa: E731
    u_t = interpolate_p1(fem.primal_space, ufn, fixed_from_fn=True)
    p_t = interpolate_rt0(fem.dual_space, pfn, fixed_from_fn=True)
    exact = (AnalyticScalar(ufn, lambda x, y: pfn(x, y)), AnalyticVector(pfn, div=lambda x, y: 0 * x))
    coeff = Coefficients.constant(mesh.n_triangles, 1.0, np.eye(2))
    brk, norms, _ = fem.evaluate(coeff, AnalyticScalar(ufn), u_t, p_t, exact, quad_degree=4)
    assert brk.total <= 1e-24 and norms.total_sq <= 1e-24


def test_polynomial_equality_exact_quadrature():
    man = mf.get("rd-poly2")
    rep = rd.check(man.mesh(8), man, quad_degree=4)
    assert rep.passed, rep.failures
    assert rep.values["relative_deviation"] <= 1e-10


@pytest.mark.parametrize("name", ["rd-poly2", "rd-poly4", "rd-sin"])
@pytest.mark.parametrize("approximation", ["interpolant", "galerkin"])
def test_case1_equality(name, approximation):
    man = mf.get(name)
    q = 2 * man.degree if man.degree else 10
    rep = rd.check(man.mesh(8), man, q, approximation, tol=1e-9 if man.degree else 1e-6)
    assert rep.passed, rep.failures


@pytest.mark.parametrize("omega", [1.0, -2.5])
def test_case2_bounds(omega):
    man = mf.get("rd-sin", omega)
    assert man.mode == "II"
    for approximation in ("interpolant", "galerkin"):
        rep = rd.check(man.mesh(8), man, 10, approximation)
        assert rep.passed, rep.failures
        lo, hi = theoretical_constants("II")[:2]
        assert lo**2 - 1e-9 <= rep.values["efficiency"] <= hi**2 + 1e-9


def test_quadrature_warning():
    man = mf.get("rd-poly4")
    mesh = man.mesh(2)
    u_t, p_t = rd.interpolate(mesh, man)
    with pytest.warns(QuadratureDegreeWarning):
        rd.majorant_and_error(mesh, rd.coefficients(mesh, man), man, u_t, p_t, quad_degree=4)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rd.majorant_and_error(mesh, rd.coefficients(mesh, man), man, u_t, p_t, quad_degree=8)


@pytest.mark.parametrize("name", ["rd-poly2", "rd-poly4", "rd-sin", "rd-layer"])
@pytest.mark.parametrize("omega", [None, 2.0])
def test_source_matches_finite_differences(name, omega):
    man = mf.get(name, omega)
    fl = man.fields
    rng = np.random.default_rng(0)
    x, y = rng.uniform(0.05, 0.95, size=(2, 50))
    h = 1e-5
    dpx = (fl["p"](x + h, y)[..., 0] - fl["p"](x - h, y)[..., 0]) / (2 * h)
    dpy = (fl["p"](x, y + h)[..., 1] - fl["p"](x, y - h)[..., 1]) / (2 * h)
    c = man.reaction()
    f_fd = -(dpx + dpy) + c * man.alpha1 * fl["u"](x, y)
    f = fl["f"](x, y)
    assert np.max(np.abs(f - f_fd)) <= 1e-6 * max(1.0, np.max(np.abs(f)))
    gx = (fl["u"](x + h, y) - fl["u"](x - h, y)) / (2 * h)
    gy = (fl["u"](x, y + h) - fl["u"](x, y - h)) / (2 * h)
    g = fl["grad_u"](x, y)
    assert np.max(np.abs(g[..., 0] - gx)) + np.max(np.abs(g[..., 1] - gy)) <= 1e-6 * max(1.0, np.max(np.abs(g)))


def test_coefficients_validation():
    with pytest.raises(ValueError):
        Coefficients.constant(2, -1.0, np.eye(2))
    with pytest.raises(ValueError):
        Coefficients.constant(2, 1.0, [[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        Coefficients.constant(2, 1.0, np.eye(2), omega=0.0)


def test_rd_coefficient_wrapper():
    man = mf.get("rd-poly2")
    mesh = man.mesh(4)
    n = mesh.n_triangles
    wrapped = rd.RDCoefficients(np.broadcast_to(man.alpha2, (n, 2, 2)), np.full(n, float(man.alpha1)))
    _, _, f = rd.exact_fields(man)
    a = rd.assemble_solve_primal(mesh, wrapped, f, 4).coeffs
    b = rd.assemble_solve_primal(mesh, rd.coefficients(mesh, man), f, 4).coeffs
    np.testing.assert_allclose(a, b, rtol=1e-14)


@settings(max_examples=10)
@given(st.integers(0, 2**31 - 1))
def test_equality_for_random_discrete_pairs(seed):
    # any conforming pair, not just interpolants, satisfies the equality
    man = mf.get("rd-poly2")
    mesh = man.mesh(4)
    fem = MixedFEM("rd", mesh)
    rng = np.random.default_rng(seed)
    u_i, p_i = rd.interpolate(mesh, man)
    du = fem.primal_space.expand(rng.standard_normal(fem.primal_space.n_dofs))
    dp = fem.dual_space.expand(rng.standard_normal(fem.dual_space.n_dofs))
    u_t = fem.primal_function(u_i.coeffs + 0.1 * du)
    p_t = fem.dual_function(p_i.coeffs + 0.1 * dp)
    brk, norms, _ = rd.majorant_and_error(mesh, rd.coefficients(mesh, man), man, u_t, p_t, 4)
    assert abs(brk.total - norms.total_sq) <= 1e-10 * norms.total_sq
