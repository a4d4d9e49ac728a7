"""Element indicators, efficiency reports, Dörfler marking and adaptive refinement."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .abstract import LOWER_FACTOR, UPPER_FACTOR
from .mesh import bisect
from .report import CheckReport

LOCAL_CONSTANT = 1.0 / math.sqrt(2.0)
# relative slack granted to quadrature when checking the constants
QUAD_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class IndicatorField:
    """Per-element squared indicators ``eta_T^2`` and, if known, errors ``e_T^2``."""

    eta_sq: np.ndarray
    e_sq: np.ndarray | None = None

    def __post_init__(self):
        eta = np.array(self.eta_sq, dtype=float).reshape(-1)
        if np.any(eta < 0):
            raise ValueError("indicators must be non-negative")
        eta.setflags(write=False)
        object.__setattr__(self, "eta_sq", eta)
        if self.e_sq is not None:
            e = np.array(self.e_sq, dtype=float).reshape(-1)
            if e.shape != eta.shape:
                raise ValueError("eta_sq and e_sq differ in length")
            if np.any(e < 0):
                raise ValueError("errors must be non-negative")
            e.setflags(write=False)
            object.__setattr__(self, "e_sq", e)

    def __len__(self):
        return self.eta_sq.size

    @property
    def eta_sq_total(self):
        return math.fsum(self.eta_sq)

    @property
    def e_sq_total(self):
        return None if self.e_sq is None else math.fsum(self.e_sq)

    @property
    def eta(self):
        return math.sqrt(self.eta_sq_total)

    @property
    def e(self):
        return None if self.e_sq is None else math.sqrt(self.e_sq_total)


def theoretical_constants(mode):
    """``(c_lower, c_upper, c_local)`` bounding ``e / eta`` globally and ``e_T / eta_T`` locally."""
    if mode == "I":
        return 1.0, 1.0, LOCAL_CONSTANT
    if mode == "II":
        return math.sqrt(LOWER_FACTOR), math.sqrt(UPPER_FACTOR), LOCAL_CONSTANT
    raise ValueError(f"mode must be 'I' or 'II', got {mode!r}")


@dataclass
class EfficiencyReport:
    mode: str
    ratio: float
    local_min: float
    local_max: float
    c_lower: float
    c_upper: float
    c_local: float
    check: CheckReport = field(repr=False, default=None)

    def __bool__(self):
        return bool(self.check)


def efficiency_report(ind, mode, tol=QUAD_TOL, global_tol=None):
    """Compare observed ratios ``e / eta`` with the theoretical constants.

    ``tol`` is the relative slack for quadrature error.  In Case I the
    global ratio must equal 1 to ``global_tol`` (default ``tol``).
    """
    if ind.e_sq is None:
        raise ValueError("efficiency needs the exact error per element")
    c_lo, c_hi, c_loc = theoretical_constants(mode)
    global_tol = tol if global_tol is None else global_tol
    eta, e = ind.eta, ind.e
    ratio = e / eta if eta > 0 else (1.0 if e == 0 else math.inf)
    pos = ind.eta_sq > 0
    local = np.sqrt(ind.e_sq[pos] / ind.eta_sq[pos]) if pos.any() else np.array([1.0])
    rep = CheckReport("efficiency", True, {
        "mode": mode, "eta": eta, "e": e, "ratio": ratio,
        "c_lower": c_lo, "c_upper": c_hi, "c_local": c_loc,
        "local_min": float(local.min()), "local_max": float(local.max()),
    })
    if eta > 0 or e > 0:
        if mode == "I":
            if abs(ratio - 1.0) > global_tol:
                rep.fail(f"global ratio {ratio!r} differs from 1 by more than {global_tol:g}")
        elif not (c_lo * (1 - tol) <= ratio <= c_hi * (1 + tol)):
            rep.fail(f"global ratio {ratio!r} outside [{c_lo:.6f}, {c_hi:.6f}]")
    # local lower bound c_T eta_T <= e_T, compared in squares
    floor = 1e-13 * ind.eta_sq.max(initial=0.0)
    viol = np.flatnonzero(c_loc**2 * ind.eta_sq > ind.e_sq * (1 + tol) + floor)
    rep.values["local_violations"] = viol.tolist()
    if viol.size:
        rep.fail(f"local bound violated on {viol.size} elements, first ids {viol[:10].tolist()}")
    return EfficiencyReport(mode, ratio, float(local.min()), float(local.max()), c_lo, c_hi, c_loc, rep)


def dorfler_mark(ind, theta):
    """Greedy Dörfler marking.

    Elements are taken by decreasing ``eta_T^2`` (ties by lower id) until the
    marked mass reaches ``theta`` times the total.  ``theta = 1`` marks every
    element with a positive indicator.
    """
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]")
    eta = ind.eta_sq if isinstance(ind, IndicatorField) else np.asarray(ind, dtype=float)
    if theta == 1:
        return set(np.flatnonzero(eta > 0).tolist())
    total = math.fsum(eta)
    if total == 0:
        return set()
    order = np.lexsort((np.arange(eta.size), -eta))
    goal = theta * total
    acc = 0.0
    marked = []
    for k in order:
        marked.append(int(k))
        acc += eta[k]
        if acc >= goal:
            break
    return set(marked)


@dataclass
class IterationRecord:
    iter: int
    n_dofs: int
    n_elements: int
    eta_sq: float
    e_sq: float | None
    efficiency_index: float | None
    marked_count: int

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class RunRecord:
    iterations: list = field(default_factory=list)
    stagnation_flags: list = field(default_factory=list)
    stop_reason: str = ""

    @property
    def final(self):
        return self.iterations[-1]

    def to_dict(self):
        return {
            "iterations": [r.to_dict() for r in self.iterations],
            "stagnation_flags": list(self.stagnation_flags),
            "stop_reason": self.stop_reason,
        }

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_csv(self, path):
        cols = ["iter", "n_dofs", "n_elements", "eta_sq", "e_sq", "efficiency_index", "marked_count"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for r in self.iterations:
                w.writerow([_cell(getattr(r, c)) for c in cols])


def _cell(v):
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else v


def adaptive_loop(driver, mesh, theta, max_iter, target_e=None, refine=None):
    """Run solve, estimate, mark, refine until ``max_iter`` or the target is met.

    Parameters
    ----------
    driver : callable
        ``driver(mesh) -> (IndicatorField, n_dofs)``.
    target_e : float, optional
        Stop once ``eta`` drops to this value.
    refine : callable, optional
        ``refine(mesh, marked) -> mesh``; newest-vertex bisection by default.

    A stagnation flag is recorded, without stopping, whenever ``eta`` has
    failed to decrease over three consecutive iterations.
    """

    refine = refine or bisect
    rec = RunRecord()
    for it in range(max_iter):
        ind, n_dofs = driver(mesh)
        eta_sq = ind.eta_sq_total
        e_sq = ind.e_sq_total
        eff = math.sqrt(e_sq / eta_sq) if e_sq is not None and eta_sq > 0 else None
        done = target_e is not None and math.sqrt(eta_sq) <= target_e
        last = it == max_iter - 1
        marked = set() if (done or last) else dorfler_mark(ind, theta)
        rec.iterations.append(IterationRecord(it, int(n_dofs), len(ind), eta_sq, e_sq, eff, len(marked)))
        if len(rec.iterations) >= 4:
            window = [r.eta_sq for r in rec.iterations[-4:]]
            if all(b >= a for a, b in zip(window, window[1:])):
                rec.stagnation_flags.append(it)
        if done:
            rec.stop_reason = "target"
            return rec
        if last:
            break
        if not marked:
            rec.stop_reason = "nothing-marked"
            return rec
        mesh = refine(mesh, marked)
    rec.stop_reason = "max_iter"
    return rec
