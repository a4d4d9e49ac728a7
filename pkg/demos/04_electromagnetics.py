"""2D electromagnetics: E in the rotated RT0 space, H in P1."""
import numpy as np

from majorant.fem import em2d, manufactured as mf
from majorant.mesh import build_rectangle, side_tags

for omega in (None, 1.0, -5.0):
    man = mf.get("em-sin", omega)
    rep = em2d.check(man.mesh(16), man, 10, "galerkin")
    kind = "Case I " if omega is None else f"omega={omega:+.0f}"
    print(f"{kind}: majorant {rep.values['majorant']:.5e}  error^2 {rep.values['error_sq']:.5e}  "
          f"passed={rep.passed}")

mesh = build_rectangle(6, 6, side_tags("D", "N", "D", "N"))
rep = em2d.duality_pairing_check(mesh, np.random.default_rng(0))
print("\ndiscrete <rot E, psi> = <E, grad_perp psi>: defect", f"{rep.values['random_defect']:.1e}")
