"""Every implicit time step is a stationary problem of the same class.

Backward Euler for a heat-type system is checked step by step; the
perturbed approximation of one step feeds the next.
"""
import numpy as np

from majorant import abstract as ab
from majorant import timestep as ts

base = ab.generate_random_problem(4, 10, 6, "I")
rng = np.random.default_rng(1)
times = np.linspace(0.0, 1.0, 21)
run = ts.heat_run(base.A, base.alpha1, base.alpha2, times, np.zeros(10),
                  lambda t: np.sin(2 * np.pi * t) * base.f, rng=rng)
print(f"{'step':>4} {'t':>5} {'majorant':>12} {'error^2':>12}")
for r in run.records[::4]:
    print(f"{r.step:4d} {r.t:5.2f} {r.majorant:12.5e} {r.error_sq:12.5e}")
print("largest relative deviation over all steps:", f"{run.max_deviation:.1e}")

p = ts.eddy_problem(base.A, base.alpha1, np.linalg.inv(base.alpha2.weight), 3.0, base.f)
pair = ab.random_pair(rng, p)
print("\neddy-current problem, omega -> -omega with conjugated data:",
      "invariant" if ts.eddy_symmetry_check(p, pair).passed else "NOT invariant")
