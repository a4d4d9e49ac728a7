"""Finite-dimensional instances of the mixed problems

    Case I:   A^H a2 A x +      a1 x = f,   y = a2 A x
    Case II:  A^H a2 A x + i w a1 x = f,   y = a2 A x

with checks for the error equality (Case I), the two-sided estimate with
constants sqrt2/(sqrt2 +- 1) (Case II) and the accompanying solution-operator,
orthogonality and minimization statements.  In finite dimensions
``D(A) = C^n`` and ``D(A^*) = C^m``, so every statement can be verified to
rounding precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .linalg import (
    Operator,
    WeightedSpace,
    least_squares_hpd,
    null_space_basis,
    solve_general,
    solve_hpd,
    weighted_inner,
    weighted_norm_sq,
)
from .report import CheckReport

SQRT2 = math.sqrt(2.0)
LOWER_FACTOR = SQRT2 / (SQRT2 + 1.0)
UPPER_FACTOR = SQRT2 / (SQRT2 - 1.0)
NORMALIZED_LOWER_FACTOR = SQRT2 / (2.0 * (SQRT2 + 1.0))
IDENTITY_TOL = 1e-10
DERIVED_TOL = 1e-9


class UnsupportedModeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class AbstractProblem:
    """``A`` (m x n), real SPD weights ``alpha1`` (n) and ``alpha2`` (m), data ``f``.

    ``omega=None`` selects Case I; a nonzero real ``omega`` selects Case II.
    """

    A: Operator
    alpha1: WeightedSpace
    alpha2: WeightedSpace
    f: np.ndarray
    omega: float | None = None

    def __post_init__(self):
        if not isinstance(self.A, Operator):
            object.__setattr__(self, "A", Operator(self.A))
        for name in ("alpha1", "alpha2"):
            w = getattr(self, name)
            if not isinstance(w, WeightedSpace):
                w = WeightedSpace(w)
                object.__setattr__(self, name, w)
            if np.iscomplexobj(w.weight) and np.abs(w.weight.imag).max() > 0:
                raise ValueError(f"{name} must be real symmetric positive definite")
        m, n = self.A.shape
        if self.alpha1.dim != n or self.alpha2.dim != m:
            raise ValueError(f"weights of dims ({self.alpha1.dim}, {self.alpha2.dim}) do not fit A of shape {(m, n)}")
        f = np.array(self.f, dtype=complex).reshape(-1)
        if f.shape[0] != n:
            raise ValueError(f"f has length {f.shape[0]}, expected {n}")
        f.setflags(write=False)
        object.__setattr__(self, "f", f)
        if self.omega is not None:
            omega = float(self.omega)
            if omega == 0.0 or not math.isfinite(omega):
                raise ValueError("omega must be a nonzero real number")
            object.__setattr__(self, "omega", omega)
            object.__setattr__(self, "_w1", self.alpha1.scaled(abs(omega)))
        else:
            object.__setattr__(self, "_w1", self.alpha1)

    @property
    def n(self):
        return self.A.shape[1]

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def is_case2(self):
        return self.omega is not None

    @property
    def primal_weight(self):
        """``alpha1`` in Case I and ``|omega| alpha1`` in Case II."""
        return self._w1

    @property
    def reaction_coefficient(self):
        """The scalar in front of ``alpha1 x``: 1 or ``i omega``."""
        return 1.0 if self.omega is None else 1j * self.omega

    def f_norm_sq(self):
        return weighted_norm_sq(self.f, self.primal_weight, inverse=True)

    def with_data(self, f):
        return replace(self, f=f)


@dataclass(frozen=True, eq=False)
class MixedPair:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=complex))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=complex))

    def __sub__(self, other):
        return MixedPair(self.x - other.x, self.y - other.y)

    def scaled(self, c):
        return MixedPair(c * self.x, c * self.y)

    def check_dims(self, p):
        if self.x.shape != (p.n,) or self.y.shape != (p.m,):
            raise ValueError(f"pair of dims ({self.x.shape}, {self.y.shape}) does not fit problem ({p.n}, {p.m})")


@dataclass(frozen=True)
class CombinedNorms:
    """Squared combined norm split into its primal and dual graph-norm parts."""

    primal_sq: float
    dual_sq: float

    @property
    def total_sq(self):
        return self.primal_sq + self.dual_sq


@dataclass(frozen=True)
class MajorantBreakdown:
    residual_equation_sq: float
    residual_flux_sq: float
    lower_bound: float
    upper_bound: float
    efficiency_index: float | None = None

    @property
    def total(self):
        return self.residual_equation_sq + self.residual_flux_sq


def _system_matrix(p):
    a = p.A.dense()
    return a.conj().T @ p.alpha2.weight @ a + p.reaction_coefficient * p.alpha1.weight


def solve_primal(p):
    """Exact primal solution ``x`` of the (discrete) variational problem."""
    k = _system_matrix(p)
    if p.is_case2:
        return solve_general(k, p.f)
    return solve_hpd(0.5 * (k + k.conj().T), p.f, method="dense")


def lift_dual(p, x):
    return p.alpha2.apply(p.A.apply(np.asarray(x, dtype=complex)))


def solve_dual(p):
    """Exact dual solution from the dual variational problem (not from ``x``)."""
    a = p.A.dense()
    w1 = p.alpha1.weight if p.omega is None else p.omega * p.alpha1.weight
    a_w1inv = np.linalg.solve(w1.T, a.T).T  # A w1^{-1}, w1 symmetric
    a2inv = np.linalg.inv(p.alpha2.weight)
    if p.is_case2:
        k = a_w1inv @ a.conj().T + 1j * a2inv
        return solve_general(k, a_w1inv @ p.f)
    k = a_w1inv @ a.conj().T + a2inv
    return solve_hpd(0.5 * (k + k.conj().T), a_w1inv @ p.f, method="dense")


def exact_solution(p):
    x = solve_primal(p)
    return MixedPair(x, lift_dual(p, x))


def primal_norm_sq(p, x):
    return weighted_norm_sq(x, p.primal_weight) + weighted_norm_sq(p.A.apply(x), p.alpha2)


def dual_norm_sq(p, y):
    return weighted_norm_sq(y, p.alpha2, inverse=True) + weighted_norm_sq(
        p.A.apply_adjoint(y), p.primal_weight, inverse=True
    )


def combined_norm(p, pair):
    pair.check_dims(p)
    return CombinedNorms(primal_norm_sq(p, pair.x), dual_norm_sq(p, pair.y))


def combined_error(p, exact, approx):
    return combined_norm(p, exact - approx)


def _residuals(p, approx, f=None):
    f = p.f if f is None else f
    r_eq = f - p.reaction_coefficient * p.alpha1.apply(approx.x) - p.A.apply_adjoint(approx.y)
    r_fl = approx.y - lift_dual(p, approx.x)
    return (
        weighted_norm_sq(r_eq, p.primal_weight, inverse=True),
        weighted_norm_sq(r_fl, p.alpha2, inverse=True),
    )


def majorant(p, approx, exact=None):
    """The computable functional ``M`` (Case I) or ``M_i`` (Case II) with its bounds.

    If ``exact`` is given, ``efficiency_index`` is ``M / e^2``.
    """
    approx.check_dims(p)
    r_eq, r_fl = _residuals(p, approx)
    total = r_eq + r_fl
    if p.is_case2:
        lo, hi = LOWER_FACTOR * total, UPPER_FACTOR * total
    else:
        lo = hi = total
    eff = None
    if exact is not None:
        e2 = combined_error(p, exact, approx).total_sq
        eff = total / e2 if e2 > 0 else math.nan
    return MajorantBreakdown(r_eq, r_fl, lo, hi, eff)


def regular_pair_majorant(p, x_tilde, exact=None):
    """Majorant of ``(x~, a2 A x~)``: the flux residual vanishes identically.

    Bounds are ``[I, I]`` in Case I and ``[I, 2 I]`` in Case II.
    """
    x_tilde = np.asarray(x_tilde, dtype=complex)
    approx = MixedPair(x_tilde, lift_dual(p, x_tilde))
    r_eq, _ = _residuals(p, approx)
    hi = 2.0 * r_eq if p.is_case2 else r_eq
    eff = None
    if exact is not None:
        e2 = combined_error(p, exact, approx).total_sq
        eff = r_eq / e2 if e2 > 0 else math.nan
    return MajorantBreakdown(r_eq, 0.0, r_eq, hi, eff)


def _below(a, b, tol, scale):
    """``a <= b`` up to ``tol * max(1, scale)``."""
    return a - b <= tol * max(1.0, scale)


def check_error_identity(p, approx, tol=IDENTITY_TOL, exact=None):
    """Verify the equality (Case I) or two-sided bound (Case II), plus normalized forms."""
    exact = exact_solution(p) if exact is None else exact
    e2 = combined_error(p, exact, approx).total_sq
    mb = majorant(p, approx)
    m = mb.total
    sol2 = combined_norm(p, exact).total_sq
    f2 = p.f_norm_sq()
    rep = CheckReport("error_identity" if not p.is_case2 else "two_sided_bound", True,
                      {"error_sq": e2, "majorant": m, "case": 2 if p.is_case2 else 1})
    if not p.is_case2:
        dev = abs(m - e2) / max(1.0, e2)
        rep.values["relative_deviation"] = dev
        if dev > tol:
            rep.fail(f"|M - e^2| / max(1, e^2) = {dev:.3e} > {tol:g}")
        if f2 > 0:
            ndev = abs(e2 / sol2 - m / f2) / max(1.0, e2 / sol2)
            rep.values["normalized_deviation"] = ndev
            if ndev > tol:
                rep.fail(f"normalized deviation {ndev:.3e} > {tol:g}")
        return rep
    lo, hi = mb.lower_bound, mb.upper_bound
    rep.values.update(lower=lo, upper=hi,
                      ratio=e2 / m if m > 0 else math.nan,
                      slack_lower=e2 - lo, slack_upper=hi - e2)
    if not _below(lo, e2, tol, e2):
        rep.fail(f"lower bound violated: {lo!r} > {e2!r}")
    if not _below(e2, hi, tol, e2):
        rep.fail(f"upper bound violated: {e2!r} > {hi!r}")
    if f2 > 0 and sol2 > 0:
        rel = e2 / sol2
        nlo, nhi = NORMALIZED_LOWER_FACTOR * m / f2, UPPER_FACTOR * m / f2
        rep.values.update(normalized_error=rel, normalized_lower=nlo, normalized_upper=nhi)
        if not (_below(nlo, rel, tol, rel) and _below(rel, nhi, tol, rel)):
            rep.fail(f"normalized bounds violated: {nlo!r} <= {rel!r} <= {nhi!r}")
    return rep


def check_regular_pair(p, x_tilde, tol=IDENTITY_TOL, exact=None):
    exact = exact_solution(p) if exact is None else exact
    x_tilde = np.asarray(x_tilde, dtype=complex)
    approx = MixedPair(x_tilde, lift_dual(p, x_tilde))
    e2 = combined_error(p, exact, approx).total_sq
    mb = regular_pair_majorant(p, x_tilde)
    i_val = mb.total
    rep = CheckReport("regular_pair", True, {"error_sq": e2, "I": i_val})
    sol2 = combined_norm(p, exact).total_sq
    f2 = p.f_norm_sq()
    if not p.is_case2:
        dev = abs(i_val - e2) / max(1.0, e2)
        rep.values["relative_deviation"] = dev
        if dev > tol:
            rep.fail(f"|I - e^2| / max(1, e^2) = {dev:.3e} > {tol:g}")
        return rep
    if not (_below(i_val, e2, tol, e2) and _below(e2, 2 * i_val, tol, e2)):
        rep.fail(f"I <= e^2 <= 2I violated: I={i_val!r}, e^2={e2!r}")
    if f2 > 0 and sol2 > 0:
        rel = e2 / sol2
        if not (_below(0.5 * i_val / f2, rel, tol, rel) and _below(rel, 2 * i_val / f2, tol, rel)):
            rep.fail("normalized regular-pair bounds violated")
    return rep


def minimize_majorant(p, fixed, value):
    """Minimize ``M`` over the free component of the pair.

    ``fixed="primal"`` keeps ``x~ = value`` and minimizes over ``psi``;
    ``fixed="dual"`` keeps ``y~ = value`` and minimizes over ``phi``.
    Returns ``(minimizer, minimum)``.  Only Case I is supported.
    """
    if p.is_case2:
        raise UnsupportedModeError("majorant minimization is only available for Case I problems")
    value = np.asarray(value, dtype=complex)
    a = p.A.dense()
    w1inv = ("inverse", p.alpha1)
    w2inv = ("inverse", p.alpha2)
    if fixed == "primal":
        terms = [
            (a.conj().T, p.f - p.alpha1.apply(value), w1inv),
            (np.eye(p.m), lift_dual(p, value), w2inv),
        ]
        psi = least_squares_hpd(terms)
        return psi, majorant(p, MixedPair(value, psi)).total
    if fixed == "dual":
        terms = [
            (p.alpha1.weight, p.f - p.A.apply_adjoint(value), w1inv),
            (p.alpha2.weight @ a, value, w2inv),
        ]
        phi = least_squares_hpd(terms)
        return phi, majorant(p, MixedPair(phi, value)).total
    raise ValueError("fixed must be 'primal' or 'dual'")


def separate_bounds_case2(p, approx, psi=None, phi=None, tol=IDENTITY_TOL, exact=None):
    """Primal error ``<= 2 M_i(x~, psi)`` and dual error ``<= 2 M_i(phi, y~)``."""
    if not p.is_case2:
        raise UnsupportedModeError("separate bounds are stated for Case II")
    exact = exact_solution(p) if exact is None else exact
    psi = approx.y if psi is None else np.asarray(psi, dtype=complex)
    phi = approx.x if phi is None else np.asarray(phi, dtype=complex)
    err = combined_error(p, exact, approx)
    m_primal = majorant(p, MixedPair(approx.x, psi)).total
    m_dual = majorant(p, MixedPair(phi, approx.y)).total
    rep = CheckReport("separate_bounds", True, {
        "primal_error_sq": err.primal_sq, "primal_bound": 2 * m_primal,
        "dual_error_sq": err.dual_sq, "dual_bound": 2 * m_dual,
    })
    if not _below(err.primal_sq, 2 * m_primal, tol, err.primal_sq):
        rep.fail(f"primal: {err.primal_sq!r} > 2 M_i = {2 * m_primal!r}")
    if not _below(err.dual_sq, 2 * m_dual, tol, err.dual_sq):
        rep.fail(f"dual: {err.dual_sq!r} > 2 M_i = {2 * m_dual!r}")
    return rep


def delta_bounds_case2(p, approx, delta, tol=IDENTITY_TOL, exact=None):
    """The one-parameter family of inequalities behind the Case II estimate."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not p.is_case2:
        raise UnsupportedModeError("delta inequalities are stated for Case II")
    exact = exact_solution(p) if exact is None else exact
    err = combined_error(p, exact, approx)
    m = majorant(p, approx).total
    c1, c2 = SQRT2 / (2 * delta), SQRT2 * delta / 2
    lower = (1 - c1) * err.primal_sq + (1 - c2) * err.dual_sq
    upper = (1 + c1) * err.primal_sq + (1 + c2) * err.dual_sq
    rep = CheckReport("delta_bounds", True, {"delta": delta, "lower": lower, "majorant": m, "upper": upper})
    scale = err.total_sq
    if not _below(lower, m, tol, scale):
        rep.fail(f"lower inequality violated: {lower!r} > {m!r}")
    if not _below(m, upper, tol, scale):
        rep.fail(f"upper inequality violated: {m!r} > {upper!r}")
    return rep


def isometry_check(p, tol=IDENTITY_TOL, exact=None):
    """Solution-operator norm: exactly 1 in Case I, in ``[1, sqrt 2]`` in Case II."""
    exact = exact_solution(p) if exact is None else exact
    norms = combined_norm(p, exact)
    sol2 = norms.total_sq
    f2 = p.f_norm_sq()
    rep = CheckReport("isometry", True, {"solution_norm_sq": sol2, "f_norm_sq": f2})
    if not p.is_case2:
        dev = abs(sol2 - f2) / max(f2, np.finfo(float).tiny) if f2 > 0 else sol2
        rep.values["relative_deviation"] = dev
        if dev > tol:
            rep.fail(f"|||(x,y)|||^2 = {sol2!r} != |f|^2 = {f2!r}")
        return rep
    split = weighted_norm_sq(p.A.apply_adjoint(exact.y), p.primal_weight, inverse=True) + weighted_norm_sq(
        exact.x, p.primal_weight
    )
    rep.values.update(ratio=sol2 / f2 if f2 > 0 else math.nan, split_identity=split)
    scale = max(f2, np.finfo(float).tiny)
    if abs(split - f2) > tol * scale:
        rep.fail(f"|A^* y|^2 + |x|^2 = {split!r} != |f|^2 = {f2!r}")
    if not (f2 - sol2 <= tol * scale and sol2 - 2 * f2 <= tol * scale):
        rep.fail(f"|f|^2 <= |||(x,y)|||^2 <= 2|f|^2 violated: {f2!r}, {sol2!r}")
    return rep


def helmholtz_orthogonality(p, tol=DERIVED_TOL, exact=None):
    """The exact dual ``y`` is ``alpha2^{-1}``-orthogonal to the kernel of ``A^*``."""
    exact = exact_solution(p) if exact is None else exact
    kernel = null_space_basis(p.A.dense().conj().T)
    rep = CheckReport("helmholtz_orthogonality", True, {"kernel_dim": len(kernel)})
    ny = np.linalg.norm(exact.y)
    worst = 0.0
    for k in kernel:
        val = abs(weighted_inner(exact.y, k, p.alpha2, inverse=True))
        worst = max(worst, val / max(ny * np.linalg.norm(k), np.finfo(float).tiny))
        if val > tol * ny * np.linalg.norm(k):
            rep.fail(f"|<y, k>_(alpha2^-1)| = {val:.3e}")
    rep.values["worst_relative"] = worst
    return rep


def dual_strong_identity(p, tol=DERIVED_TOL, exact=None):
    """``A alpha1^{-1}(A^* y - f) = -alpha2^{-1} y`` (Case I) resp.
    ``A (omega alpha1)^{-1}(A^* y - f) = -i alpha2^{-1} y`` (Case II)."""
    exact = exact_solution(p) if exact is None else exact
    t = p.alpha1.solve(p.A.apply_adjoint(exact.y) - p.f)
    lhs = p.A.apply(t)
    rhs = -p.alpha2.solve(exact.y)
    if p.is_case2:
        lhs = lhs / p.omega
        rhs = 1j * rhs
    scale = max(np.linalg.norm(rhs), np.linalg.norm(lhs), np.linalg.norm(p.f))
    dev = np.linalg.norm(lhs - rhs) / scale if scale > 0 else 0.0
    rep = CheckReport("dual_strong_identity", True, {"relative_deviation": dev})
    if dev > tol:
        rep.fail(f"dual strong identity deviates by {dev:.3e}")
    return rep


def generate_random_problem(seed, n, m, mode="I", omega=None, rank=None):
    """Deterministic random instance.

    ``A`` has entries uniformly distributed in the complex unit disk (or is a
    product of such factors when ``rank`` is given); weights are
    ``B^T B + I`` with ``B`` standard normal scaled by ``1/sqrt(dim)``.
    In Case II ``omega`` defaults to a random value of random sign.
    """
    if n < 1 or m < 1:
        raise ValueError("dimensions must be positive")
    rng = np.random.default_rng(seed)

    def disk(shape):
        r = np.sqrt(rng.uniform(size=shape))
        return r * np.exp(2j * np.pi * rng.uniform(size=shape))

    if rank is None:
        a = disk((m, n))
    else:
        a = disk((m, rank)) @ disk((rank, n)) / max(rank, 1)

    def spd(d):
        b = rng.standard_normal((d, d)) / math.sqrt(d)
        return b.T @ b + np.eye(d)

    alpha1, alpha2 = spd(n), spd(m)
    f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    if mode in ("I", 1):
        omega = None
    elif mode in ("II", 2):
        if omega is None:
            omega = rng.choice([-1.0, 1.0]) * 10 ** rng.uniform(-1, 1)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return AbstractProblem(Operator(a), WeightedSpace(alpha1), WeightedSpace(alpha2), f, omega)


def random_pair(rng, p, exact=None, scale=None):
    """A random conforming approximation; with ``exact`` given, a perturbation of it."""
    def cvec(k):
        return rng.standard_normal(k) + 1j * rng.standard_normal(k)

    if exact is None:
        return MixedPair(cvec(p.n), cvec(p.m))
    s = 10 ** rng.uniform(-3, 0) if scale is None else scale
    return MixedPair(exact.x + s * cvec(p.n), exact.y + s * cvec(p.m))
