"""The variational consistency tripwire.

For random in-span fields w, v the strain-energy bilinear form must equal the
strong-form pairing plus boundary operator terms.  The identity holds to
quadrature/roundoff precision with the consistent ersatz force, on every
geometry; the classical (incorrect) bending term breaks it on curved
geometries while flat geometries mask the defect.
"""

from klshell.problems import get_problem
from klshell.verify import greens_identity_residual

print(f"{'problem':>8} {'consistent':>14} {'inconsistent':>14}")
for pid in (1, 2, 3, 5, 7):
    good = max(r["relative"] for r in greens_identity_residual(
        get_problem(pid), degree=4, n_quad=20, n_pairs=3))
    bad = max(r["relative"] for r in greens_identity_residual(
        get_problem(pid), degree=4, n_quad=20, n_pairs=3, variant=True))
    kind = "flat" if pid in (1, 2) else "curved"
    print(f"{pid:>8} {good:>14.3e} {bad:>14.3e}   ({kind})")

print("\nflat geometries satisfy the identity under both ersatz formulas;")
print("curved geometries expose the inconsistent variant at O(1e-3).")
