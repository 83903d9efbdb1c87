"""The eight manufactured problems: geometry, boundary layout, load data.

Prints the registry, evaluates exact fields at spot points, and manufactures
one load-data set (body force plus edge/corner boundary data), demonstrating
the export/import round trip.
"""

import os
import tempfile

import numpy as np

from klshell.problems import (PROBLEM_IDS, eval_exact, export_load_data,
                              generate_load_data, get_problem,
                              import_load_data)

print(f"{'id':>2}  {'description':<62} {'edges S/E/N/W'}")
for pid in PROBLEM_IDS:
    spec = get_problem(pid)
    layout = "/".join(spec.edges[e].value[:4] for e in ("S", "E", "N", "W"))
    print(f"{pid:>2}  {spec.description:<62} {layout}")
    chi_d, chi_n = spec.corner_sets()
    print(f"     corners: {len(chi_d)} Dirichlet, {len(chi_n)} Neumann; "
          f"patch diameter {spec.patch.diameter():.3f}")

print("\nexact-field spot checks:")
u3 = eval_exact(get_problem(3), [0.5], [0.5], 0)[0, :, 0, 0]
print("  problem 3 at (0.5, 0.5): |u| =", np.linalg.norm(u3),
      "(quartic-by-quadratic transverse mode)")
u8 = eval_exact(get_problem(8), [1.0], [0.5], 0)[0, :, 0, 0]
print("  problem 8 at xi1=1 (clamped rim): u =", u8)

spec = get_problem(4)
data = generate_load_data(spec, mesh=2, n_interior=6, n_edge=6)
print(f"\nmanufactured data for problem 4 on a 2x2 mesh:")
print(f"  body force at {data.body_f.shape[0]} points, "
      f"max |f| = {np.abs(data.body_f).max():.4g}")
for edge, blk in data.edges.items():
    roles = [k for k in blk if k != "xi"]
    print(f"  edge {edge} ({spec.edges[edge].value}): {roles}")
print("  corner data:", {f"{c[0]:g},{c[1]:g}": round(e["s"], 6)
                         for c, e in data.corners.items()})

with tempfile.TemporaryDirectory() as tmp:
    path = os.path.join(tmp, "load.json")
    export_load_data(path, data)
    back = import_load_data(path)
    print("  export/import round trip bit-exact:",
          np.array_equal(back.body_f, data.body_f))
