"""Randomized and manufactured verification suites.

Each suite returns a :class:`SuiteResult` with aggregate values and the
reports of failed checks.  The command-line interface and the test-suite
both run these.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import abstract as ab
from . import robin as rb
from . import timestep as ts
from .estimator import adaptive_loop, efficiency_report
from .fem import em2d, rd
from .fem import manufactured as mf
from .mesh import refine_uniform

DELTAS = (0.5, 1 / math.sqrt(2), 1.0, math.sqrt(2), 2.0)


@dataclass
class SuiteResult:
    name: str
    values: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    checks: int = 0

    @property
    def passed(self):
        return not self.failures

    def record(self, rep):
        self.checks += 1
        if not rep.passed:
            self.failures.append(rep.to_dict())

    def worst(self, key, value):
        self.values[key] = max(self.values.get(key, 0.0), float(value))

    def to_dict(self):
        return {"name": self.name, "passed": self.passed, "checks": self.checks,
                "values": dict(self.values), "failures": list(self.failures)}


def _dims(rng, max_dim):
    return int(rng.integers(1, max_dim + 1)), int(rng.integers(1, max_dim + 1))


def abstract_case1(seed=0, count=100, approx=10, max_dim=40, tol=ab.IDENTITY_TOL):
    """Error equality, isometry and minimization on random Case I instances."""
    res = SuiteResult("abstract-case-I")
    rng = np.random.default_rng(seed)
    for k in range(count):
        n, m = _dims(rng, max_dim)
        p = ab.generate_random_problem(int(rng.integers(2**31)), n, m, "I")
        exact = ab.exact_solution(p)
        for _ in range(approx):
            rep = ab.check_error_identity(p, ab.random_pair(rng, p, exact=exact if rng.random() < 0.5 else None), tol, exact)
            res.record(rep)
            res.worst("max_identity_deviation", rep.values["relative_deviation"])
        rep = ab.isometry_check(p, tol, exact)
        res.record(rep)
        res.worst("max_isometry_deviation", rep.values["relative_deviation"])
    res.values["instances"] = count
    return res


def abstract_minimization(seed=0, count=50, max_dim=40, tol=1e-8):
    """Minimizing the majorant in one component attains the error of the other."""
    res = SuiteResult("abstract-minimization")
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n, m = _dims(rng, max_dim)
        p = ab.generate_random_problem(int(rng.integers(2**31)), n, m, "I")
        exact = ab.exact_solution(p)
        approx = ab.random_pair(rng, p, exact=exact)
        err = ab.combined_error(p, exact, approx)
        psi, mval = ab.minimize_majorant(p, "primal", approx.x)
        phi, dval = ab.minimize_majorant(p, "dual", approx.y)
        dev_p = abs(mval - err.primal_sq) / max(err.primal_sq, 1e-300)
        dev_d = abs(dval - err.dual_sq) / max(err.dual_sq, 1e-300)
        arg_p = np.linalg.norm(psi - exact.y) / max(np.linalg.norm(exact.y), 1e-300)
        arg_d = np.linalg.norm(phi - exact.x) / max(np.linalg.norm(exact.x), 1e-300)
        res.checks += 1
        for key, v in (("max_value_deviation", max(dev_p, dev_d)), ("max_minimizer_deviation", max(arg_p, arg_d))):
            res.worst(key, v)
            if v > tol:
                res.failures.append({"name": key, "dims": [n, m], "value": v})
    res.values["instances"] = count
    return res


def abstract_case2(seed=0, count=1000, approx=3, max_dim=40, tol=ab.IDENTITY_TOL):
    """Two-sided bound, regular pairs, separate and delta bounds on random Case II instances."""
    res = SuiteResult("abstract-case-II")
    rng = np.random.default_rng(seed)
    ratios = []
    negative = 0
    for _ in range(count):
        n, m = _dims(rng, max_dim)
        p = ab.generate_random_problem(int(rng.integers(2**31)), n, m, "II")
        negative += p.omega < 0
        exact = ab.exact_solution(p)
        for _ in range(approx):
            a = ab.random_pair(rng, p, exact=exact if rng.random() < 0.5 else None)
            rep = ab.check_error_identity(p, a, tol, exact)
            res.record(rep)
            ratios.append(rep.values["ratio"])
            res.record(ab.separate_bounds_case2(p, a, tol=tol, exact=exact))
            psi = ab.random_pair(rng, p).y
            phi = ab.random_pair(rng, p).x
            res.record(ab.separate_bounds_case2(p, a, psi=psi, phi=phi, tol=tol, exact=exact))
            for d in DELTAS:
                res.record(ab.delta_bounds_case2(p, a, d, tol=tol, exact=exact))
        res.record(ab.check_regular_pair(p, ab.random_pair(rng, p).x, tol, exact))
        res.record(ab.isometry_check(p, tol, exact))
    res.values.update(instances=count, negative_omega=int(negative),
                      min_ratio=float(min(ratios)), max_ratio=float(max(ratios)),
                      lower_factor=ab.LOWER_FACTOR, upper_factor=ab.UPPER_FACTOR)
    return res


def scalar_extremal_instance():
    """``A = I``, unit weights, ``omega = 1``, ``f = 1``: the solution norm is ``2 |f|^2``."""
    p = ab.AbstractProblem(np.eye(1), np.eye(1), np.eye(1), np.ones(1), 1.0)
    exact = ab.exact_solution(p)
    sol2 = ab.combined_norm(p, exact).total_sq
    return p, exact, sol2, p.f_norm_sq()


def abstract_structure(seed=0, count=100, max_dim=40, tol=ab.DERIVED_TOL):
    """Kernel orthogonality and the strong dual identities on rank-deficient instances."""
    res = SuiteResult("abstract-structure")
    rng = np.random.default_rng(seed)
    for k in range(count):
        n, m = _dims(rng, max_dim)
        n, m = max(n, 2), max(m, 2)
        rank = int(rng.integers(1, min(n, m)))
        mode = "I" if k % 2 == 0 else "II"
        p = ab.generate_random_problem(int(rng.integers(2**31)), n, m, mode, rank=rank)
        exact = ab.exact_solution(p)
        rep = ab.helmholtz_orthogonality(p, tol, exact)
        res.record(rep)
        res.worst("max_orthogonality_defect", rep.values["worst_relative"])
        rep = ab.dual_strong_identity(p, tol, exact)
        res.record(rep)
        res.worst("max_strong_identity_defect", rep.values["relative_deviation"])
    res.values["instances"] = count
    return res


def fem_check(problem, n=16, omega=None, quad_degree=None, approximation="interpolant", tol=None):
    """Equality or bounds for one catalog entry on an ``n x n`` mesh."""
    man = mf.get(problem, omega)
    if quad_degree is None:
        quad_degree = 2 * man.degree if man.degree else 10
    if tol is None:
        tol = 1e-9 if man.degree else 1e-6
    mod = rd if man.kind == "rd" else em2d
    rep = mod.check(man.mesh(n), man, quad_degree, approximation, tol)
    rep.values.update(problem=problem, n=n, quad_degree=quad_degree, approximation=approximation)
    return rep


def em_structure(n=8, seed=0):
    mesh = mf.get("rd-poly2").mesh(n)  # D and N edges both present
    rng = np.random.default_rng(seed)
    return em2d.duality_pairing_check(mesh, rng), em2d.rotation_identity_check(mesh, rng)


def adaptive_comparison(problem="rd-layer", n0=16, theta=0.5, max_iter=12, quad_degree=10, omega=None, target=None):
    """Adaptive run (until ``eta <= target`` if given) and the uniform refinement needed to reach its final ``eta``."""
    man = mf.get(problem, omega)
    drv = rd.driver(man, quad_degree) if man.kind == "rd" else _em_driver(man, quad_degree)
    rec = adaptive_loop(drv, man.mesh(n0), theta, max_iter, target)
    reached = math.sqrt(rec.final.eta_sq)
    mesh = man.mesh(n0)
    uniform = []
    while True:
        ind, nd = drv(mesh)
        uniform.append({"n_dofs": int(nd), "eta": ind.eta, "efficiency_index": ind.e / ind.eta})
        if ind.eta <= reached or len(uniform) > 8:
            break
        mesh = refine_uniform(mesh)
    return rec, uniform


def _em_driver(man, quad_degree):
    def run(mesh):
        e_t, h_t = em2d.solve_em(mesh, em2d.coefficients(mesh, man), em2d.exact_fields(man)[2], quad_degree)
        _, _, ind = em2d.majorant_em(mesh, em2d.coefficients(mesh, man), man, e_t, h_t, quad_degree)
        return ind, em2d.em_fem(mesh).n_dofs

    return run


def adaptive_efficiency(rec, mode, tol=1e-5):
    """Failures of the per-iteration efficiency requirement in a run record."""
    bad = []
    for r in rec.iterations:
        if r.efficiency_index is None:
            continue
        if mode == "I" and abs(r.efficiency_index - 1) > tol:
            bad.append(r.iter)
    return bad


def heat_suite(seed=0, steps=20, n=12, m=8, dt=0.05, tol=1e-10):
    """Backward Euler with a per-step check of the equality."""
    rng = np.random.default_rng(seed)
    base = ab.generate_random_problem(int(rng.integers(2**31)), n, m, "I")
    times = np.concatenate([[0.0], np.cumsum(dt * (0.5 + rng.random(steps)))])
    f_dir = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    run = ts.heat_run(base.A, base.alpha1, base.alpha2, times, np.zeros(n),
                      lambda t: np.sin(2 * np.pi * t) * f_dir, rng=rng)
    res = SuiteResult("heat")
    res.checks = len(run.records)
    res.values.update(steps=len(run.records), max_step_deviation=run.max_deviation)
    for r in run.records:
        if r.relative_deviation > tol:
            res.failures.append({"name": "heat-step", "step": r.step, "deviation": r.relative_deviation})
    return res, run


def wave_formula_suite(seed=0, count=50, max_dim=10, tol=1e-12):
    """Assembled wave-step data against the formula written out with dense matrices."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("wave-step")

    def spd(d):
        b = rng.standard_normal((d, d))
        return b @ b.T + d * np.eye(d)

    def cv(d):
        return rng.standard_normal(d) + 1j * rng.standard_normal(d)

    for _ in range(count):
        n, m = _dims(rng, max_dim)
        a = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
        l1, l2 = spd(n), spd(m)
        delta = float(rng.uniform(0.01, 1.0))
        x0, y0, g, h = cv(n), cv(m), cv(n), cv(m)
        p = ts.wave_step_problem(a, l1, l2, delta, x0, y0, g, h)
        # written out entrywise, with lambda1^-1 x0 from a solve instead of an inverse
        z = l2 @ h + y0 / delta
        want = np.array([sum(np.conj(a[i, j]) * z[i] for i in range(m)) for j in range(n)])
        want = want + np.linalg.solve(l1, x0) / delta**2 + g / delta
        l1inv = np.linalg.inv(l1)
        dev = np.linalg.norm(p.f - want) / max(np.linalg.norm(want), 1e-300)
        res.checks += 1
        res.worst("max_formula_deviation", dev)
        res.worst("max_alpha1_deviation", np.abs(p.alpha1.weight - l1inv / delta**2).max() / np.abs(l1inv).max() * delta**2)
        if dev > tol:
            res.failures.append({"name": "wave-formula", "deviation": dev})
        rep = ab.check_error_identity(p, ab.random_pair(rng, p))
        res.record(rep)
    return res


def eddy_suite(seed=0, count=200, max_dim=20, omega=None, tol=ab.IDENTITY_TOL):
    rng = np.random.default_rng(seed)
    res = SuiteResult("eddy")
    for _ in range(count):
        n, m = _dims(rng, max_dim)
        base = ab.generate_random_problem(int(rng.integers(2**31)), n, m, "II", omega=omega)
        mu = np.linalg.inv(base.alpha2.weight)
        p = ts.eddy_problem(base.A, base.alpha1, mu, base.omega, base.f)
        a = ab.random_pair(rng, p)
        res.record(ab.check_error_identity(p, a, tol))
        rep = ts.eddy_symmetry_check(p, a)
        res.record(rep)
    res.values["instances"] = count
    return res


def robin_suite(n=8, gammas=("1", "5", "1@0.5:10"), quad_degree=10, tol=rb.ROBIN_TOL):
    res = SuiteResult("robin")
    for g in gammas:
        prob = rb.build_model_problem(n, g)
        for fam in ("interior_bubble", "matched_trace"):
            u_t, p_t = rb.admissible_pair(prob, fam)
            rep = rb.robin_identity_check(prob, u_t, p_t, quad_degree, tol)
            res.record(rep)
            res.worst("max_identity_deviation", rep.values["relative_deviation"])
            res.worst("max_trace_deviation", rep.values["trace_relative_deviation"])
            if fam == "matched_trace":
                res.values.setdefault("boundary_terms", []).append(rep.values["boundary_term"])
        rep = rb.zero_data_identity(prob, quad_degree, tol)
        res.record(rep)
        res.worst("max_zero_data_deviation", rep.values["f_relative_deviation"])
    dn = rb.dn_problem(n)
    u_t, p_t = rb.dn_interpolants(dn, np.random.default_rng(0))
    rep = rb.mixed_dn_inhomogeneous_check(dn, u_t, p_t, quad_degree)
    res.record(rep)
    res.worst("max_dn_deviation", rep.values["relative_deviation"])
    res.record(rb.minimization_attainment(dn, u_t, p_t, quad_degree))
    return res


def efficiency_suite(problems=("rd-poly2", "rd-sin", "em-poly", "em-sin"), n=12, omegas=(None, 1.0, -3.0)):
    """Global and local efficiency constants on Galerkin pairs."""
    res = SuiteResult("efficiency")
    for name in problems:
        for om in omegas:
            man = mf.get(name, om)
            mesh = man.mesh(n)
            mod = rd if man.kind == "rd" else em2d
            if man.kind == "rd":
                u_t, p_t = rd.galerkin_pair(mesh, man, 10)
                _, _, ind = rd.majorant_and_error(mesh, rd.coefficients(mesh, man), man, u_t, p_t, 10)
            else:
                e_t, h_t = em2d.solve_em(mesh, em2d.coefficients(mesh, man), em2d.exact_fields(man)[2], 10)
                _, _, ind = mod.majorant_em(mesh, em2d.coefficients(mesh, man), man, e_t, h_t, 10)
            eff = efficiency_report(ind, man.mode, tol=1e-8, global_tol=1e-5)
            res.record(eff.check)
            key = "case1_ratio" if man.mode == "I" else "case2_ratio"
            lo, hi = res.values.get(key, (math.inf, -math.inf))
            res.values[key] = (min(lo, eff.ratio), max(hi, eff.ratio))
            res.values["min_local_ratio"] = min(res.values.get("min_local_ratio", math.inf), eff.local_min)
    return res
