"""Fourier analysis on Z_2^n and balanced truncations.

Start from a random mean-zero function on the hypercube, look at its Walsh
spectrum, and compare the averaged truncation norms with the two right-hand
terms as k grows.  Then repeat with 2x2 matrix values.
"""

import numpy as np

from xplab.inequality import eval_np, eval_rp1
from xplab.lattice import GroupShape, LatticeFunction, dft, random_function
from xplab.operators import cond_expect


def mean_zero(f):
    axes = tuple(range(f.shape.n))
    return LatticeFunction(f.shape, f.values - f.values.mean(axis=axes, keepdims=True))


n = 6
shape = GroupShape.cyclic(2, n)
f = mean_zero(random_function(shape, seed=1))

F = dft(f).values[..., 0, 0]
levels = np.zeros(n + 1)
for w in np.ndindex(*shape.moduli):
    levels[sum(w)] += abs(F[w]) ** 2
print("Walsh energy by level |A|:", np.round(levels, 4))

# E_{[n] minus S} keeps exactly the coefficients supported inside S
S = (0, 2)
kept = dft(cond_expect(f, S)).values[..., 0, 0]
inside = all(abs(kept[w]) < 1e-14 for w in np.ndindex(*shape.moduli) if any(w[j] for j in range(n) if j not in S))
print(f"truncation to S={S} keeps only frequencies inside S: {inside}")

print("\nscalar case, p = 4")
print(" k      lhs   deriv term   full term   ratio")
for k in range(1, n + 1):
    r = eval_np(f, 4, k)
    print(f"{k:2d} {r.lhs:8.4f} {r.rhs_derivative_term:12.4f} {r.rhs_full_term:11.4f} {r.ratio:7.4f}")

h = mean_zero(random_function(shape, 2, seed=2))
print("\n2x2 matrix values, Schatten-4 fibres")
for k in (1, 3, 6):
    r = eval_rp1(h, 4, k)
    print(f"k={k}: ratio {r.ratio:.4f}")
