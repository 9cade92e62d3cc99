"""The metric inequality on Z_{8 ell m}^n and the chain of evaluators that must agree.

One function, three routes: the abstract pair (Z_2^n, beta_1, translations),
the cyclic evaluator with ell = 1, and the Schatten-valued evaluator with
1x1 matrices.  Then the exact sparse path takes over on a group far too big
to store densely.
"""

import time

from xplab.inequality import RepresentablePair, eval_cyclic, eval_nc, eval_theorem_a
from xplab.lattice import GroupShape, random_function
from xplab.operators import EtaMap, MultiplierFamily
from xplab.sparse import random_trigpoly

n, m, p = 3, 1, 4
shape = GroupShape.cyclic(8 * m, n)
f = random_function(shape, seed=5)
pair = RepresentablePair(EtaMap.beta(1, n, m), MultiplierFamily.translations(shape))

print(" k   route        lhs        deriv        full")
for k in range(1, n + 1):
    for name, rep in (
        ("theorem_a", eval_theorem_a(f, pair, p, k, m)),
        ("cyclic", eval_cyclic(f, p, k, m)),
        ("nc d=1", eval_nc(f, p, k, m)),
    ):
        print(f"{k:2d}   {name:9s} {rep.lhs:10.5f} {rep.rhs_derivative_term:12.5f} {rep.rhs_full_term:11.5f}")

# Z_32^10 has about 10^15 points; a 6-term polynomial is still exact for even p
big = GroupShape.cyclic(32, 10)
t = random_trigpoly(big, 6, seed=0)
t0 = time.perf_counter()
rep = eval_cyclic(t, 4, 3, m=2, ell=2)
print(f"\nZ_32^10, 6 terms, k=3: ratio {rep.ratio:.5f} over all C(10,3) subsets "
      f"({rep.subset_mode}, {time.perf_counter() - t0:.2f} s)")
