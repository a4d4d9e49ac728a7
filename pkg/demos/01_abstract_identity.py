"""The error equality for A* a2 A x + a1 x = f on a random finite-dimensional instance.

Any approximation pair (x~, y~) is scored by a majorant that needs only the
data.  For this problem class the majorant *is* the squared error in the
combined norm, whatever the pair.
"""
import numpy as np

from majorant import abstract as ab

p = ab.generate_random_problem(seed=1, n=12, m=7, mode="I")
exact = ab.exact_solution(p)
rng = np.random.default_rng(0)

print("Random Case I problem: A is 7 x 12, weights are SPD.")
print(f"{'pair':>22} {'majorant':>14} {'error^2':>14} {'rel. dev':>10}")
for label, pair in [
    ("zero", ab.MixedPair(np.zeros(p.n), np.zeros(p.m))),
    ("random", ab.random_pair(rng, p)),
    ("small perturbation", ab.random_pair(rng, p, exact, scale=1e-3)),
    ("exact", exact),
]:
    m = ab.majorant(p, pair).total
    e2 = ab.combined_error(p, exact, pair).total_sq
    print(f"{label:>22} {m:14.6e} {e2:14.6e} {abs(m - e2) / max(1, e2):10.1e}")

print("\nThe zero pair gives |f|^2 in the a1^-1 weight, which is also the squared")
print("norm of the solution:", f"{p.f_norm_sq():.6e}", "vs", f"{ab.combined_norm(p, exact).total_sq:.6e}")

psi, val = ab.minimize_majorant(p, "primal", np.zeros(p.n))
print("\nMinimizing over y~ with x~ = 0 recovers y exactly:",
      f"|psi - y| = {np.linalg.norm(psi - exact.y):.1e}")
