"""Problems arising from time discretization and time-harmonic ansatzes.

* Backward Euler for ``d/dt (a x) + A* a2 A x = f`` produces one Case I
  problem per step with ``alpha1 = a / delta`` and data
  ``f_n + a x_{n-1} / delta``.
* An implicit step of the first-order wave system produces a Case I
  problem for ``x_n`` with ``alpha1 = delta^-2 lambda1^-1`` and
  ``alpha2 = lambda2``.
* The eddy current ansatz gives a Case II problem with ``alpha1 = sigma``
  and ``alpha2 = mu^-1``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import abstract as ab
from .linalg import Operator, WeightedSpace
from .report import CheckReport


def _positive_step(delta):
    delta = float(delta)
    if not delta > 0 or not math.isfinite(delta):
        raise ValueError(f"time step must be positive, got {delta}")
    return delta


def _matrix(w):
    return w.weight if isinstance(w, WeightedSpace) else np.atleast_2d(np.asarray(w, dtype=float))


def backward_euler_step(A, base_alpha1, alpha2, delta, x_prev, f_n):
    """Case I problem solved by ``x_n`` in one backward Euler step.

    ``alpha1 = base_alpha1 / delta`` and ``f = f_n + base_alpha1 x_prev / delta``.
    """
    delta = _positive_step(delta)
    a = _matrix(base_alpha1)
    f = np.asarray(f_n, dtype=complex) + (a @ np.asarray(x_prev, dtype=complex)) / delta
    return ab.AbstractProblem(A, a / delta, alpha2, f)


@dataclass
class StepRecord:
    step: int
    t: float
    majorant: float
    error_sq: float
    relative_deviation: float

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class HeatRun:
    times: np.ndarray
    states: list = field(default_factory=list)
    records: list = field(default_factory=list)

    @property
    def max_deviation(self):
        return max((r.relative_deviation for r in self.records), default=0.0)

    def to_dict(self):
        return {"times": [float(t) for t in self.times], "steps": [r.to_dict() for r in self.records]}

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_csv(self, path):
        cols = ["step", "t", "majorant", "error_sq", "relative_deviation"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for r in self.records:
                w.writerow([r.step, repr(r.t), repr(r.majorant), repr(r.error_sq), repr(r.relative_deviation)])


def heat_run(A, base_alpha1, alpha2, times, x0, source, rng=None, perturbation=0.1):
    """Backward Euler over ``times`` with a per-step check of the error equality.

    Each step is solved exactly and then perturbed by a random conforming
    error of size ``perturbation`` (no perturbation if ``rng`` is
    None).  The perturbed state is carried to the next step, and each
    step's majorant is compared with the error against that step's exact
    solution.

    Parameters
    ----------
    source : callable
        ``source(t) -> f(t)``.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise ValueError("need at least two time points")
    if np.any(np.diff(times) <= 0):
        raise ValueError("time points must increase strictly")
    run = HeatRun(times)
    x = np.asarray(x0, dtype=complex)
    run.states.append(x)
    for n in range(1, times.size):
        delta = times[n] - times[n - 1]
        p = backward_euler_step(A, base_alpha1, alpha2, delta, x, source(times[n]))
        exact = ab.exact_solution(p)
        approx = exact
        if rng is not None and perturbation:
            approx = ab.random_pair(rng, p, exact=exact, scale=perturbation)
        m = ab.majorant(p, approx).total
        e2 = ab.combined_error(p, exact, approx).total_sq
        run.records.append(StepRecord(n, float(times[n]), m, e2, abs(m - e2) / max(1.0, e2)))
        x = approx.x
        run.states.append(x)
    return run


def wave_step_problem(A, lambda1, lambda2, delta, x_prev, y_prev, g_n, h_n):
    """Case I problem for ``x_n`` in an implicit step of the first-order wave system.

    ``alpha1 = delta^-2 lambda1^-1``, ``alpha2 = lambda2`` and
    ``f = A*(lambda2 h_n + y_prev / delta) + delta^-2 lambda1^-1 x_prev + g_n / delta``.
    """
    delta = _positive_step(delta)
    op = A if isinstance(A, Operator) else Operator(A)
    l1inv = np.linalg.inv(_matrix(lambda1))
    l2 = _matrix(lambda2)
    a1 = l1inv / delta**2
    f = (op.apply_adjoint(l2 @ np.asarray(h_n, dtype=complex) + np.asarray(y_prev, dtype=complex) / delta)
         + a1 @ np.asarray(x_prev, dtype=complex) + np.asarray(g_n, dtype=complex) / delta)
    return ab.AbstractProblem(op, 0.5 * (a1 + a1.T), l2, f)


def wave_dual_update(A, lambda2, delta, y_prev, x_n, h_n):
    """``y_n = y_prev + delta lambda2 (h_n - A x_n)``."""
    delta = _positive_step(delta)
    op = A if isinstance(A, Operator) else Operator(A)
    return np.asarray(y_prev, dtype=complex) + delta * (_matrix(lambda2) @ (np.asarray(h_n) - op.apply(x_n)))


def eddy_problem(A, sigma, mu, omega, F):
    """Case II problem with ``alpha1 = sigma`` and ``alpha2 = mu^-1``."""
    if omega is None or float(omega) == 0.0:
        raise ValueError("omega must be a nonzero real number")
    mu_inv = np.linalg.inv(_matrix(mu))
    return ab.AbstractProblem(A, sigma, 0.5 * (mu_inv + mu_inv.T), F, float(omega))


def conjugate_problem(p):
    """The problem with ``omega -> -omega`` and conjugated operator and data."""
    return ab.AbstractProblem(Operator(p.A.dense().conj()), p.alpha1, p.alpha2, p.f.conj(), -p.omega)


def eddy_symmetry_check(p, approx, tol=1e-12):
    """Majorant and error are invariant under ``omega -> -omega`` with conjugated data."""
    q = conjugate_problem(p)
    capprox = ab.MixedPair(approx.x.conj(), approx.y.conj())
    m1 = ab.majorant(p, approx).total
    m2 = ab.majorant(q, capprox).total
    e1 = ab.combined_error(p, ab.exact_solution(p), approx).total_sq
    e2 = ab.combined_error(q, ab.exact_solution(q), capprox).total_sq
    rep = CheckReport("eddy-symmetry", True, {"majorant": m1, "majorant_conj": m2, "error_sq": e1, "error_sq_conj": e2})
    for a, b, what in ((m1, m2, "majorant"), (e1, e2, "error")):
        if abs(a - b) > tol * max(1.0, abs(a)):
            rep.fail(f"{what} changes under conjugation: {a!r} vs {b!r}")
    return rep
