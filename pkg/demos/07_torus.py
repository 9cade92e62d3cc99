"""Torus inequalities through their exact discretizations.

A trigonometric polynomial lives on the grid Z_{8 ell m}^n.  The uniform
variant samples y at the points beta_ell(s) / 2 ell, so refining ell is a
one-sided Riemann sum and the ratio converges at rate 1/ell.
"""

from xplab.inequality import eval_torus, torus_trigpoly

terms = [((1, 0), 1.0), ((0, 1), 1.0), ((1, -1), 0.5)]
prev = None
print("ell   uniform ratio   change")
for ell in (1, 2, 4, 8, 16, 32):
    r = eval_torus(torus_trigpoly(2, 1, ell, terms), 4, 1, 1, "uniform-eta", ell).ratio
    change = "" if prev is None else f"{(r - prev) / prev:+.1%}"
    print(f"{ell:3d} {r:15.5f}   {change}")
    prev = r

f = torus_trigpoly(2, 1, 4, terms)
for variant in ("sign-eta", "classical-derivative"):
    r = eval_torus(f, 4, 1, 1, variant, 4)
    print(f"{variant:22s} lhs {r.lhs:.4f}  deriv {r.rhs_derivative_term:.4f}  full {r.rhs_full_term:.4f}  ratio {r.ratio:.4f}")
