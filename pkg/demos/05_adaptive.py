"""Adaptive refinement driven by the element indicators on a steep interior layer."""
import math

from majorant import suites

rec, uniform = suites.adaptive_comparison("rd-layer", n0=16, theta=0.5, max_iter=20, target=9.0)
print(f"{'iter':>4} {'dofs':>6} {'eta':>9} {'e/eta':>12} {'marked':>6}")
for r in rec.iterations:
    print(f"{r.iter:4d} {r.n_dofs:6d} {math.sqrt(r.eta_sq):9.4f} {r.efficiency_index:12.9f} {r.marked_count:6d}")
print("\nuniform refinement:")
for u in uniform:
    print(f"     {u['n_dofs']:6d} {u['eta']:9.4f}")
print(f"\nadaptive uses {rec.final.n_dofs / uniform[-1]['n_dofs']:.0%} of the uniform dofs for the same eta")
