"""A small manufactured-solution convergence study with SVG output.

Runs the flat annulus at p = 2, 3 over meshes 4..16, prints the four error
norms per cell and the fitted rates (optimal: L2 ~ min(p+1, 2p-2), energy ~
p-1), then writes a self-contained log-log SVG plot next to this script.

The same sweep with --variant inconsistent (or variant=True here) reproduces
the arrested 0.5 / 1.5 rates of the inconsistent ersatz force; see
demo_greens_identity.py for the pointwise version of that defect.
"""

import os

import numpy as np

from klshell.plots import convergence_svg
from klshell.verify import run_study

rep = run_study([1], [2, 3], [4, 8, 16])

print(f"{'p':>2} {'mesh':>5} {'L2':>11} {'H1':>11} {'energy':>11} {'triple':>11}")
for c in rep.cells:
    e = c.errors
    print(f"{c.degree:>2} {c.mesh:>5} {e['l2']:>11.3e} {e['h1']:>11.3e} "
          f"{e['energy']:>11.3e} {e['triple']:>11.3e}")

print("\nfitted rates (dyadic ladder, unflagged points):")
for (pid, p, norm), slope in sorted(rep.slopes.items()):
    if norm in ("l2", "energy") and slope is not None:
        target = min(p + 1, 2 * p - 2) if norm == "l2" else p - 1
        print(f"  p={p} {norm:>7}: {slope:6.3f}   (optimal {target})")

series = []
for p in (2, 3):
    cells = [c for c in rep.cells if c.degree == p]
    series.append((f"p={p}", [1.0 / c.mesh for c in cells],
                   [c.errors["l2"] for c in cells]))
path = os.path.join(os.path.dirname(__file__) or ".", "annulus_l2.svg")
with open(path, "w") as fh:
    fh.write(convergence_svg(series, title="flat annulus: relative L2 error",
                             guides=[3.0, 4.0]))
print("\nwrote", path)
