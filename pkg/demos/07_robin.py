"""Mixed Dirichlet / Neumann / Robin boundary conditions.

For pairs that satisfy the coupled Robin constraint, the majorant equals the
combined error plus twice the gamma-weighted trace error on the Robin side.
"""
from majorant import robin as rb

for gamma in ("1", "5", "1@0.5:10"):
    prob = rb.build_model_problem(8, gamma)
    u_t, p_t = rb.admissible_pair(prob, "matched_trace")
    rep = rb.robin_identity_check(prob, u_t, p_t)
    v = rep.values
    print(f"gamma={gamma:>9}: error^2 {v['error_sq']:.6e} + 2*boundary {2 * v['boundary_term']:.6e} "
          f"= {v['lhs']:.6e}, majorant {v['majorant']:.6e}")

prob = rb.build_model_problem(8, "5")
rep = rb.zero_data_identity(prob)
print("\nzero pair: lhs", f"{rep.values['lhs']:.8e}", " |f|^2", f"{rep.values['f_norm_sq']:.8e}")
