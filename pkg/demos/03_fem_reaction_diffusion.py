"""The equality for -div(alpha grad u) + rho u = f with P1 / RT0 approximations.

Primal and dual Galerkin solutions are computed independently, then the
majorant is compared with the exact error on a sequence of meshes.
"""
from majorant.fem import manufactured as mf, rd

man = mf.get("rd-sin")
print("u = sin(pi x) sin(pi y), Galerkin pair, degree-10 quadrature")
print(f"{'n':>4} {'dofs':>7} {'majorant':>12} {'error^2':>12} {'rel. dev':>9}")
for n in (4, 8, 16, 32):
    mesh = man.mesh(n)
    u_h, p_h = rd.galerkin_pair(mesh, man, 10)
    brk, norms, _ = rd.majorant_and_error(mesh, rd.coefficients(mesh, man), man, u_h, p_h, 10)
    dofs = u_h.space.n_dofs + p_h.space.n_dofs
    print(f"{n:4d} {dofs:7d} {brk.total:12.5e} {norms.total_sq:12.5e} {abs(brk.total / norms.total_sq - 1):9.1e}")

man = mf.get("rd-sin", omega=2.0)
rep = rd.check(man.mesh(16), man, 10, "galerkin")
print("\nwith i omega rho u (omega = 2): e / eta =", f"{rep.values['efficiency']:.4f}",
      "(allowed range [0.7654, 1.8478])")
