"""Group algebras of free products and the character multipliers M_u.

Build elements of L(Z_8^{*2}), check that M_u is a trace-preserving
homomorphism and an isometry for even p, then evaluate the transferred
inequality, including the free group F_2.
"""

import numpy as np

from xplab.freealg import (
    FreeElement,
    ReducedWord,
    chi_u,
    freelp_norm_even,
    multiplier_Mu,
    random_element,
    trace,
)
from xplab.inequality import eval_free_transfer

w = ReducedWord.parse([(0, 1), (1, 3), (1, 2), (0, -1)], 8)
print("g1 g2^3 g2^2 g1^-1 reduces to", w.letters)
print("chi_(1,1)(g1 g2^3) =", np.round(chi_u(ReducedWord.parse([(0, 1), (1, 3)], 8), (1, 1)), 12))

a = random_element(2, 8, size=6, seed=0)
b = random_element(2, 8, size=6, seed=1)
u = (3, 5)
defect = multiplier_Mu(a * b, u) - multiplier_Mu(a, u) * multiplier_Mu(b, u)
hom = max((abs(c) for c in defect.coeffs.values()), default=0.0)
print(f"homomorphism defect {hom:.1e}, trace defect {abs(trace(multiplier_Mu(a, u)) - trace(a)):.1e}")
for p in (2, 4, 6):
    print(f"||a||_{p} = {freelp_norm_even(a, p):.6f}   ||M_u a||_{p} = {freelp_norm_even(multiplier_Mu(a, u), p):.6f}")

s = FreeElement.lam([(0, 1)], 1, 8) + FreeElement.lam([(0, -1)], 1, 8)
print(f"\n||g + g^-1||_4 in L(Z_8) = {freelp_norm_even(s, 4):.6f}  (6^(1/4) = {6 ** 0.25:.6f})")

print("\ntransferred inequality, p = 4")
for name, el, m in (
    ("Z_8 * Z_8", FreeElement.lam([(0, 1)], 2, 8) + FreeElement.lam([(1, 1)], 2, 8), 1),
    ("Z_8 * Z_8 random", a, 1),
    ("F_2 random", random_element(2, None, size=5, max_len=2, seed=2), 1),
):
    r = eval_free_transfer(el, 4, 1, m)
    print(f"{name:18s} lhs {r.lhs:9.4f}  deriv {r.rhs_derivative_term:10.4f}  full {r.rhs_full_term:8.4f}  ratio {r.ratio:.4f}")
