"""Differential geometry of the obstacle-course midsurfaces.

Builds pointwise frames and prints curvature classifications: the annulus is
flat, the cylinder parabolic (one zero principal curvature), the hourglass
hyperbolic (negative Gaussian curvature), the hemisphere elliptic.
"""

import numpy as np

from klshell.geometry import build_edge_frame, build_frame
from klshell.problems import get_problem
from klshell.splines import surface_partials

rng = np.random.default_rng(1)
xi = rng.uniform(0.1, 0.9, (200, 2))

for pid, name in ((1, "flat annulus"), (3, "cylinder"),
                  (5, "hyperbolic hourglass"), (7, "hemisphere")):
    patch = get_problem(pid).patch
    fr = build_frame(surface_partials(patch, xi[:, 0], xi[:, 1], 3))
    gauss = np.linalg.det(fr.b_mix)
    mean = 0.5 * np.trace(fr.b_mix, axis1=1, axis2=2)
    print(f"problem {pid} ({name}):")
    print(f"  Gaussian curvature range [{gauss.min():+.3f}, {gauss.max():+.3f}]"
          f"  mean curvature range [{mean.min():+.3f}, {mean.max():+.3f}]")
    ident = np.einsum("nag,ngb->nab", fr.a_up, fr.a_lo)
    print("  metric inverse identity error:",
          np.abs(ident - np.eye(2)).max())

# Edge frames: tangent is counterclockwise, normal is outward.
patch = get_problem(7).patch
mid = {"S": (0.5, 0.0), "E": (1.0, 0.5), "N": (0.5, 1.0), "W": (0.0, 0.5)}
print("\nhemisphere edge frames (t and n in Cartesian components):")
for edge, m in mid.items():
    fr = build_frame(surface_partials(patch, [m[0]], [m[1]], 3))
    ef = build_edge_frame(fr, edge)
    print(f"  {edge}: t = {np.round(ef.t_vec(fr)[0], 3)}   "
          f"n = {np.round(ef.n_vec(fr)[0], 3)}   |s| = {ef.s_norm[0]:.4f}")
