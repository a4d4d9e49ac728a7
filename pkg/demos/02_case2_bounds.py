"""Two-sided bounds for A* a2 A x + i omega a1 x = f.

With the imaginary reaction term the majorant no longer equals the error,
but it brackets it within fixed factors sqrt2/(sqrt2 +- 1).
"""
import numpy as np

from majorant import abstract as ab

rng = np.random.default_rng(3)
ratios = []
for seed in range(500):
    p = ab.generate_random_problem(seed, 1 + seed % 15, 1 + seed % 11, "II")
    exact = ab.exact_solution(p)
    pair = ab.random_pair(rng, p, exact if seed % 2 else None)
    ratios.append(ab.combined_error(p, exact, pair).total_sq / ab.majorant(p, pair).total)

print(f"guaranteed range of e^2 / M : [{ab.LOWER_FACTOR:.4f}, {ab.UPPER_FACTOR:.4f}]")
print(f"observed over 500 instances: [{min(ratios):.4f}, {max(ratios):.4f}]")

# the scalar instance A = I, a1 = a2 = 1, omega = 1, f = 1
p = ab.AbstractProblem(np.eye(1), np.eye(1), np.eye(1), np.ones(1), 1.0)
exact = ab.exact_solution(p)
print("\nscalar instance: x = y =", exact.x[0])
print("solution norm^2 =", ab.combined_norm(p, exact).total_sq, " |f|^2 =", p.f_norm_sq())
print("so the solution operator has norm sqrt(2), the largest value allowed.")
