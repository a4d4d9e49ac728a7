import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from majorant import abstract as ab
from majorant import timestep as ts

from conftest import random_hpd


def base(seed=0, n=5, m=4):
    return ab.generate_random_problem(seed, n, m, "I")


def test_backward_euler_zero_step():
    p0 = base()
    p = ts.backward_euler_step(p0.A, p0.alpha1, p0.alpha2, 0.1, np.zeros(5), np.zeros(5))
    assert np.all(ab.solve_primal(p) == 0)


def test_backward_euler_data():
    p0 = base()
    x_prev = np.arange(5.0)
    f_n = np.ones(5)
    p = ts.backward_euler_step(p0.A, p0.alpha1, p0.alpha2, 0.25, x_prev, f_n)
    np.testing.assert_allclose(p.alpha1.weight, 4 * p0.alpha1.weight)
    np.testing.assert_allclose(p.f, f_n + 4 * p0.alpha1.weight @ x_prev)
    with pytest.raises(ValueError):
        ts.backward_euler_step(p0.A, p0.alpha1, p0.alpha2, 0.0, x_prev, f_n)


def test_stationary_limit():
    # constant source: the steps converge to the solution of A* a2 A x = f
    p0 = base(3, 4, 6)  # A has full column rank, so the elliptic problem is solvable
    a = p0.A.dense()
    f = p0.f
    x_inf = np.linalg.solve(a.conj().T @ p0.alpha2.weight @ a, f)
    run = ts.heat_run(p0.A, p0.alpha1, p0.alpha2, np.linspace(0, 200, 401), np.zeros(4), lambda t: f)
    assert np.linalg.norm(run.states[-1] - x_inf) <= 1e-8 * np.linalg.norm(x_inf)


@given(st.integers(0, 2**31 - 1))
def test_heat_per_step_equality(seed):
    rng = np.random.default_rng(seed)
    p0 = ab.generate_random_problem(seed, 6, 5, "I")
    times = np.concatenate([[0.0], np.cumsum(0.01 + rng.random(20) * 0.1)])
    run = ts.heat_run(p0.A, p0.alpha1, p0.alpha2, times, np.zeros(6), lambda t: np.cos(t) * p0.f, rng=rng)
    assert len(run.records) == 20
    assert run.max_deviation <= 1e-10
    assert all(r.error_sq > 0 for r in run.records)


def test_heat_run_validation_and_output(tmp_path, rng):
    p0 = base()
    with pytest.raises(ValueError):
        ts.heat_run(p0.A, p0.alpha1, p0.alpha2, [0.0], np.zeros(5), lambda t: p0.f)
    with pytest.raises(ValueError):
        ts.heat_run(p0.A, p0.alpha1, p0.alpha2, [0.0, 0.2, 0.1], np.zeros(5), lambda t: p0.f)
    run = ts.heat_run(p0.A, p0.alpha1, p0.alpha2, [0.0, 0.1, 0.3], np.zeros(5), lambda t: p0.f, rng=rng)
    run.write_json(tmp_path / "h.json")
    run.write_csv(tmp_path / "h.csv")
    assert len(json.loads((tmp_path / "h.json").read_text())["steps"]) == 2
    assert len((tmp_path / "h.csv").read_text().splitlines()) == 3


def test_wave_zero_data():
    a = np.ones((3, 4))
    p = ts.wave_step_problem(a, np.eye(4), np.eye(3), 0.5, np.zeros(4), np.zeros(3), np.zeros(4), np.zeros(3))
    assert np.all(p.f == 0)
    assert np.all(ab.solve_primal(p) == 0)


def test_wave_formula_hand_assembled(rng):
    a = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    l1, l2 = random_hpd(rng, 4), random_hpd(rng, 3)
    delta = 0.3
    x_prev, g = rng.standard_normal(4), rng.standard_normal(4)
    y_prev, h = rng.standard_normal(3), rng.standard_normal(3)
    p = ts.wave_step_problem(a, l1, l2, delta, x_prev, y_prev, g, h)
    l1inv = np.linalg.inv(l1)
    expected = np.zeros(4, dtype=complex)
    for i in range(4):
        for j in range(3):
            expected[i] += np.conj(a[j, i]) * (sum(l2[j, k] * h[k] for k in range(3)) + y_prev[j] / delta)
        expected[i] += sum(l1inv[i, k] * x_prev[k] for k in range(4)) / delta**2 + g[i] / delta
    np.testing.assert_allclose(p.f, expected, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(p.alpha1.weight, l1inv / delta**2, rtol=1e-12)
    np.testing.assert_allclose(p.alpha2.weight, l2)


def test_wave_step_solves_implicit_system(rng):
    a = rng.standard_normal((2, 3))
    l1, l2 = random_hpd(rng, 3), random_hpd(rng, 2)
    delta = 0.2
    x0, y0 = rng.standard_normal(3), rng.standard_normal(2)
    g, h = rng.standard_normal(3), rng.standard_normal(2)
    p = ts.wave_step_problem(a, l1, l2, delta, x0, y0, g, h)
    x1 = ab.solve_primal(p)
    y1 = ts.wave_dual_update(a, l2, delta, y0, x1, h)
    # first equation of the implicit step: lambda1^-1 (x1 - x0) / delta = A* y1 + g
    np.testing.assert_allclose(np.linalg.solve(l1, x1 - x0) / delta, a.T @ y1 + g, atol=1e-10)


@given(st.integers(0, 2**31 - 1), st.integers(1, 6), st.integers(1, 6))
def test_wave_problem_invariants(seed, n, m):
    rng = np.random.default_rng(seed)
    p = ts.wave_step_problem(rng.standard_normal((m, n)), random_hpd(rng, n), random_hpd(rng, m),
                             0.01 + rng.random(), rng.standard_normal(n), rng.standard_normal(m),
                             rng.standard_normal(n), rng.standard_normal(m))
    assert isinstance(p, ab.AbstractProblem) and not p.is_case2
    assert ab.check_error_identity(p, ab.random_pair(rng, p)).passed


def test_eddy_zero_current():
    p0 = ab.generate_random_problem(1, 3, 3, "II")
    p = ts.eddy_problem(p0.A, p0.alpha1, np.linalg.inv(p0.alpha2.weight), 2.0, np.zeros(3))
    assert np.all(ab.solve_primal(p) == 0)
    with pytest.raises(ValueError):
        ts.eddy_problem(p0.A, p0.alpha1, np.eye(3), 0.0, np.zeros(3))


@given(st.integers(0, 2**31 - 1), st.floats(-20, 20).filter(lambda w: abs(w) > 1e-3))
def test_eddy_bounds_and_symmetry(seed, omega):
    rng = np.random.default_rng(seed)
    p0 = ab.generate_random_problem(seed, 5, 4, "II")
    p = ts.eddy_problem(p0.A, p0.alpha1, np.linalg.inv(p0.alpha2.weight), omega, p0.f)
    np.testing.assert_allclose(p.alpha2.weight, p0.alpha2.weight, rtol=1e-10, atol=1e-12)
    approx = ab.random_pair(rng, p)
    assert ab.check_error_identity(p, approx).passed
    assert ts.eddy_symmetry_check(p, approx, tol=1e-10).passed
