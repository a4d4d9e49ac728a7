import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from majorant import abstract as ab
from majorant.linalg import WeightedSpace, weighted_norm_sq

# frozen oracle values for the scalar instance A = I, alpha1 = alpha2 = 1, omega = 1, f = 1
SCALAR_X = (1 - 1j) / 2
SCALAR_SOLUTION_NORM_SQ = 2.0
LOWER = math.sqrt(2) / (math.sqrt(2) + 1)  # 0.585786...
UPPER = math.sqrt(2) / (math.sqrt(2) - 1)  # 3.414213...


def scalar_instance():
    return ab.AbstractProblem(np.eye(1), np.eye(1), np.eye(1), np.ones(1), 1.0)


def test_constants_frozen():
    assert ab.LOWER_FACTOR == pytest.approx(0.5857864376269049, abs=1e-15)
    assert ab.UPPER_FACTOR == pytest.approx(3.414213562373095, abs=1e-14)


seeds = st.integers(0, 2**31 - 1)
dims = st.integers(1, 12)


def test_problem_invariants():
    with pytest.raises(ValueError):
        ab.AbstractProblem(np.eye(2), np.eye(2), np.eye(2), np.ones(2), 0.0)
    with pytest.raises(ValueError):
        ab.AbstractProblem(np.eye(2), np.eye(3), np.eye(2), np.ones(2))
    with pytest.raises(ValueError):
        ab.AbstractProblem(np.eye(2), np.eye(2), np.eye(2), np.ones(3))


def test_solve_primal_scalar():
    p = ab.AbstractProblem(np.zeros((1, 1)), np.eye(1), np.eye(1), np.ones(1))
    np.testing.assert_allclose(ab.solve_primal(p), [1.0])


def test_scalar_instance_solution():
    p = scalar_instance()
    x = ab.solve_primal(p)
    y = ab.solve_dual(p)
    np.testing.assert_allclose(x, [SCALAR_X], atol=1e-15)
    np.testing.assert_allclose(y, [SCALAR_X], atol=1e-15)
    np.testing.assert_allclose(ab.lift_dual(p, x), [SCALAR_X], atol=1e-15)
    exact = ab.MixedPair(x, y)
    zero = ab.MixedPair(np.zeros(1), np.zeros(1))
    assert ab.combined_error(p, exact, zero).total_sq == pytest.approx(SCALAR_SOLUTION_NORM_SQ, abs=1e-12)
    assert p.f_norm_sq() == pytest.approx(1.0)


def test_scalar_instance_bounds_and_checks():
    p = scalar_instance()
    zero = ab.MixedPair(np.zeros(1), np.zeros(1))
    m = ab.majorant(p, zero)
    assert m.total == pytest.approx(1.0)
    assert m.lower_bound == pytest.approx(0.5857864376269049)
    assert m.upper_bound == pytest.approx(3.414213562373095)
    assert ab.check_error_identity(p, zero).passed
    sep = ab.separate_bounds_case2(p, zero)
    assert sep.passed and sep.values["primal_error_sq"] == pytest.approx(1.0)
    iso = ab.isometry_check(p)
    assert iso.passed and iso.values["ratio"] == pytest.approx(2.0, abs=1e-12)
    assert ab.dual_strong_identity(p).values["relative_deviation"] < 1e-15


def test_lift_dual_trivial():
    p = ab.AbstractProblem(np.eye(2), np.eye(2), 2 * np.eye(2), np.ones(2))
    np.testing.assert_allclose(ab.lift_dual(p, np.ones(2)), [2, 2])
    np.testing.assert_allclose(ab.lift_dual(p, np.zeros(2)), [0, 0])


def test_solve_primal_against_dense(rng):
    p = ab.generate_random_problem(3, 5, 8, "I")
    a = p.A.dense()
    k = a.conj().T @ p.alpha2.weight @ a + p.alpha1.weight
    np.testing.assert_allclose(ab.solve_primal(p), np.linalg.solve(k, p.f), rtol=1e-12)


def test_zero_data():
    p = ab.generate_random_problem(1, 4, 3, "I").with_data(np.zeros(4))
    exact = ab.exact_solution(p)
    assert np.all(exact.x == 0) and np.all(exact.y == 0)
    assert ab.isometry_check(p).passed
    assert ab.dual_strong_identity(p).passed


@given(seeds, dims, dims, st.sampled_from(["I", "II"]))
def test_dual_solve_matches_lift(seed, n, m, mode):
    p = ab.generate_random_problem(seed, n, m, mode)
    y = ab.solve_dual(p)
    y_ref = ab.lift_dual(p, ab.solve_primal(p))
    assert np.linalg.norm(y - y_ref) <= 1e-9 * max(1.0, np.linalg.norm(y_ref))


def test_combined_error_terms(rng):
    p = ab.generate_random_problem(5, 6, 4, "I")
    exact = ab.exact_solution(p)
    approx = ab.random_pair(rng, p)
    d = exact - approx
    a = p.A.dense()
    terms = [
        np.real(np.conj(d.x) @ p.alpha1.weight @ d.x),
        np.real(np.conj(a @ d.x) @ p.alpha2.weight @ (a @ d.x)),
        np.real(np.conj(d.y) @ np.linalg.solve(p.alpha2.weight, d.y)),
        np.real(np.conj(a.conj().T @ d.y) @ np.linalg.solve(p.alpha1.weight, a.conj().T @ d.y)),
    ]
    assert ab.combined_error(p, exact, approx).total_sq == pytest.approx(sum(terms), rel=1e-12)
    assert ab.combined_error(p, exact, exact).total_sq == 0


def test_majorant_trivial_values():
    p = ab.generate_random_problem(9, 5, 5, "I")
    exact = ab.exact_solution(p)
    assert ab.majorant(p, exact).total <= 1e-20 * p.f_norm_sq() + 1e-24
    zero = ab.MixedPair(np.zeros(5), np.zeros(5))
    assert ab.majorant(p, zero).total == pytest.approx(p.f_norm_sq(), rel=1e-14)


@given(seeds, dims, dims)
def test_case1_equality_property(seed, n, m):
    p = ab.generate_random_problem(seed, n, m, "I")
    rng = np.random.default_rng(seed)
    rep = ab.check_error_identity(p, ab.random_pair(rng, p))
    assert rep.passed, rep.failures


@given(seeds, dims, dims)
def test_case2_bounds_property(seed, n, m):
    p = ab.generate_random_problem(seed, n, m, "II")
    rng = np.random.default_rng(seed)
    exact = ab.exact_solution(p)
    for approx in (ab.random_pair(rng, p), ab.random_pair(rng, p, exact)):
        rep = ab.check_error_identity(p, approx, exact=exact)
        assert rep.passed, rep.failures
        assert ab.LOWER_FACTOR - 1e-10 <= rep.values["ratio"] <= ab.UPPER_FACTOR + 1e-10


def test_regular_pair(rng):
    p = ab.generate_random_problem(4, 6, 5, "I")
    exact = ab.exact_solution(p)
    assert ab.regular_pair_majorant(p, exact.x).total == pytest.approx(0, abs=1e-20)
    assert ab.regular_pair_majorant(p, np.zeros(6)).total == pytest.approx(p.f_norm_sq(), rel=1e-14)
    assert ab.check_regular_pair(p, rng.standard_normal(6)).passed
    q = ab.generate_random_problem(4, 6, 5, "II")
    assert ab.check_regular_pair(q, rng.standard_normal(6)).passed


def test_minimize_trivial():
    p = ab.generate_random_problem(11, 5, 7, "I")
    exact = ab.exact_solution(p)
    psi, val = ab.minimize_majorant(p, "primal", exact.x)
    assert val <= 1e-20 * max(1.0, p.f_norm_sq())
    np.testing.assert_allclose(psi, exact.y, atol=1e-10)
    _, val0 = ab.minimize_majorant(p, "primal", np.zeros(5))
    expected = weighted_norm_sq(exact.x, p.alpha1) + weighted_norm_sq(p.A.apply(exact.x), p.alpha2)
    assert val0 == pytest.approx(expected, rel=1e-10)


@given(seeds, dims, dims)
def test_minimize_both_sides(seed, n, m):
    p = ab.generate_random_problem(seed, n, m, "I")
    rng = np.random.default_rng(seed)
    exact = ab.exact_solution(p)
    approx = ab.random_pair(rng, p)
    err = ab.combined_error(p, exact, approx)
    psi, val = ab.minimize_majorant(p, "primal", approx.x)
    assert abs(val - err.primal_sq) <= 1e-8 * max(1.0, err.primal_sq)
    assert np.linalg.norm(psi - exact.y) <= 1e-8 * max(1.0, np.linalg.norm(exact.y))
    phi, val = ab.minimize_majorant(p, "dual", approx.y)
    assert abs(val - err.dual_sq) <= 1e-8 * max(1.0, err.dual_sq)
    assert np.linalg.norm(phi - exact.x) <= 1e-8 * max(1.0, np.linalg.norm(exact.x))


def test_minimize_rejects_case2_and_bad_side():
    p = scalar_instance()
    with pytest.raises(ab.UnsupportedModeError):
        ab.minimize_majorant(p, "primal", np.zeros(1))
    q = ab.generate_random_problem(0, 2, 2, "I")
    with pytest.raises(ValueError):
        ab.minimize_majorant(q, "both", np.zeros(2))


@given(seeds, dims, dims, st.sampled_from([0.5, 1 / math.sqrt(2), 1.0, math.sqrt(2), 2.0]))
def test_delta_and_separate_bounds(seed, n, m, delta):
    p = ab.generate_random_problem(seed, n, m, "II")
    rng = np.random.default_rng(seed)
    approx = ab.random_pair(rng, p)
    assert ab.delta_bounds_case2(p, approx, delta).passed
    assert ab.separate_bounds_case2(p, approx).passed


def test_delta_one_reproduces_main_bounds(rng):
    p = ab.generate_random_problem(2, 4, 4, "II")
    approx = ab.random_pair(rng, p)
    rep = ab.delta_bounds_case2(p, approx, 1.0)
    e2 = ab.combined_error(p, ab.exact_solution(p), approx).total_sq
    m = ab.majorant(p, approx).total
    # at delta = 1 both coefficients equal 1 -+ 1/sqrt(2)
    assert rep.values["lower"] <= m <= rep.values["upper"]
    assert ab.LOWER_FACTOR * m <= e2 * (1 + 1e-12) and e2 <= ab.UPPER_FACTOR * m * (1 + 1e-12)


def test_delta_bounds_input_checks():
    p = scalar_instance()
    zero = ab.MixedPair(np.zeros(1), np.zeros(1))
    with pytest.raises(ValueError):
        ab.delta_bounds_case2(p, zero, 0.0)
    with pytest.raises(ab.UnsupportedModeError):
        ab.delta_bounds_case2(ab.generate_random_problem(0, 1, 1), zero, 1.0)


def test_exact_approx_case2_bounds():
    p = ab.generate_random_problem(6, 3, 3, "II")
    exact = ab.exact_solution(p)
    assert ab.separate_bounds_case2(p, exact).passed
    assert ab.delta_bounds_case2(p, exact, 2.0).passed


@given(seeds, dims, dims)
def test_isometry_case1(seed, n, m):
    p = ab.generate_random_problem(seed, n, m, "I")
    assert ab.isometry_check(p).values["relative_deviation"] <= 1e-10


def test_helmholtz_constructed_kernel():
    p = ab.AbstractProblem(np.array([[1.0], [0.0]]), np.eye(1), np.diag([2.0, 3.0]), np.ones(1))
    rep = ab.helmholtz_orthogonality(p)
    assert rep.values["kernel_dim"] == 1 and rep.passed
    assert abs(ab.exact_solution(p).y[1]) == 0


def test_helmholtz_surjective():
    p = ab.generate_random_problem(0, 5, 3, "I")
    rep = ab.helmholtz_orthogonality(p)
    assert rep.values["kernel_dim"] == 0 and rep.passed


@given(seeds, st.integers(2, 10), st.integers(2, 10), st.sampled_from(["I", "II"]))
def test_structure_rank_deficient(seed, n, m, mode):
    rank = 1 + seed % (min(n, m) - 1)
    p = ab.generate_random_problem(seed, n, m, mode, rank=rank)
    assert ab.helmholtz_orthogonality(p).passed
    assert ab.dual_strong_identity(p).passed


def test_generator_determinism():
    a = ab.generate_random_problem(42, 4, 3, "II")
    b = ab.generate_random_problem(42, 4, 3, "II")
    assert np.array_equal(a.A.dense(), b.A.dense())
    assert np.array_equal(a.alpha1.weight, b.alpha1.weight)
    assert np.array_equal(a.f, b.f) and a.omega == b.omega


def test_generator_scalar_and_invariants():
    for seed in range(100):
        p = ab.generate_random_problem(seed, 1 + seed % 3, 1 + seed % 2, "II" if seed % 2 else "I")
        assert np.all(np.linalg.eigvalsh(p.alpha1.weight) > 0)
        assert np.all(np.linalg.eigvalsh(p.alpha2.weight) > 0)
    p = ab.generate_random_problem(7, 1, 1)
    assert p.alpha1.weight[0, 0] > 0 and p.alpha2.weight[0, 0] > 0
    with pytest.raises(ValueError):
        ab.generate_random_problem(0, 2, 2, "III")


def test_pair_dimension_check():
    p = scalar_instance()
    with pytest.raises(ValueError):
        ab.majorant(p, ab.MixedPair(np.zeros(2), np.zeros(1)))


def test_weighted_space_accepts_scalar_weight():
    p = ab.AbstractProblem(np.eye(1), WeightedSpace(2.0), 3.0, np.ones(1))
    assert p.alpha1.weight[0, 0] == 2.0
