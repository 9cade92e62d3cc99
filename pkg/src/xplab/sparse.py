"""Sparse scalar trigonometric polynomials on finite product groups.

For groups too large to store densely (``Z_48^8`` has ~3e13 points) a
function given by a few Fourier coefficients still has exactly computable
even-p norms: ``||g||_{2r}^{2r} = sum_xi |(g^r)^(xi)|^2``.

:class:`ShiftMomentForm` goes one step further.  For a fixed frequency
support it writes averages ``E_v ||M_v f - f||_p^p`` over product laws of
shifts ``v`` as a fixed form in the coefficients of ``f``, so re-evaluating
after a coefficient change costs one contraction.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .lattice import FOURIER, GroupShape, LatticeFunction, dft, idft
from .norms import is_even_integer

_PRUNE = 1e-15


def _aggregate(freqs: np.ndarray, coeffs: np.ndarray, moduli) -> tuple[np.ndarray, np.ndarray]:
    freqs = np.mod(freqs, np.asarray(moduli, dtype=np.int64))
    if len(freqs) == 0:
        return freqs.reshape(0, len(moduli)), coeffs.reshape(0)
    uniq, inv = np.unique(freqs, axis=0, return_inverse=True)
    out = np.zeros(len(uniq), dtype=complex)
    np.add.at(out, inv.ravel(), coeffs)
    return uniq, out


@dataclass(frozen=True, eq=False)
class TrigPoly:
    """``f(x) = sum_t coeffs[t] chi_{freqs[t]}(x)`` with distinct frequencies."""

    shape: GroupShape
    freqs: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=np.int64).reshape(-1, self.shape.n)
        coeffs = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        if len(freqs) != len(coeffs):
            raise ValueError("frequency and coefficient counts differ")
        freqs = np.mod(freqs, np.asarray(self.shape.moduli, dtype=np.int64))
        if len(np.unique(freqs, axis=0)) != len(freqs):
            freqs, coeffs = _aggregate(freqs, coeffs, self.shape.moduli)
        freqs.flags.writeable = False
        coeffs.flags.writeable = False
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def dim(self) -> int:
        return 1

    @property
    def size(self) -> int:
        return len(self.coeffs)

    @classmethod
    def from_terms(cls, shape: GroupShape, terms: Iterable[tuple[Sequence[int], complex]]) -> "TrigPoly":
        terms = list(terms)
        freqs = np.array([w for w, _ in terms], dtype=np.int64).reshape(-1, shape.n)
        return cls(shape, freqs, np.array([c for _, c in terms], dtype=complex))

    @classmethod
    def from_lattice(cls, f: LatticeFunction, tol: float = 1e-13) -> "TrigPoly":
        if f.dim != 1:
            raise ValueError("TrigPoly is scalar valued")
        F = dft(f).scalar
        scale = max(np.max(np.abs(F)), 1.0)
        idx = np.argwhere(np.abs(F) > tol * scale)
        return cls(f.shape, idx, F[tuple(idx.T)])

    def to_lattice(self) -> LatticeFunction:
        self.shape.check_cap()
        F = np.zeros(self.shape.moduli, dtype=complex)
        np.add.at(F, tuple(self.freqs.T), self.coeffs)
        return idft(LatticeFunction.from_array(self.shape, F, FOURIER))

    def phases(self, v: Sequence[int]) -> np.ndarray:
        """``chi_w(v)`` for every frequency ``w`` of the support."""
        v = np.asarray(self.shape.reduce(v), dtype=np.int64)
        moduli = np.asarray(self.shape.moduli, dtype=np.int64)
        frac = np.zeros(len(self.freqs))
        for j in range(self.shape.n):
            frac = frac + (self.freqs[:, j] * v[j] % moduli[j]) / moduli[j]
        return np.exp(2j * np.pi * frac)

    def translate(self, v: Sequence[int]) -> "TrigPoly":
        return TrigPoly(self.shape, self.freqs, self.coeffs * self.phases(v))

    def with_coeffs(self, coeffs) -> "TrigPoly":
        return TrigPoly(self.shape, self.freqs, coeffs)

    def multiply_symbol(self, symbol: np.ndarray) -> "TrigPoly":
        """Fourier multiplier with per-support-point symbol values."""
        return TrigPoly(self.shape, self.freqs, self.coeffs * symbol)

    def mean(self) -> complex:
        zero = np.all(self.freqs == 0, axis=1)
        return complex(self.coeffs[zero].sum())

    def restrict(self, S: Iterable[int]) -> "TrigPoly":
        """Keep only frequencies supported in ``S`` (conditional expectation onto ``S``)."""
        keep = np.ones(self.shape.n, dtype=bool)
        keep[list(S)] = False
        mask = ~np.any(self.freqs[:, keep] != 0, axis=1)
        return TrigPoly(self.shape, self.freqs[mask], self.coeffs[mask])

    def pruned(self) -> "TrigPoly":
        mask = np.abs(self.coeffs) > _PRUNE
        return TrigPoly(self.shape, self.freqs[mask], self.coeffs[mask])

    def _combine(self, other: "TrigPoly", sign: float) -> "TrigPoly":
        if not isinstance(other, TrigPoly):
            return NotImplemented
        if other.shape != self.shape:
            raise ValueError("incompatible shapes")
        freqs = np.concatenate([self.freqs, other.freqs])
        coeffs = np.concatenate([self.coeffs, sign * other.coeffs])
        return TrigPoly(self.shape, *_aggregate(freqs, coeffs, self.shape.moduli))

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return TrigPoly(self.shape, self.freqs, self.coeffs * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def power(self, r: int) -> "TrigPoly":
        """Pointwise ``f^r`` by repeated sparse convolution."""
        out = TrigPoly(self.shape, np.zeros((1, self.shape.n), dtype=np.int64), np.ones(1))
        for _ in range(r):
            freqs = (out.freqs[:, None, :] + self.freqs[None, :, :]).reshape(-1, self.shape.n)
            coeffs = (out.coeffs[:, None] * self.coeffs[None, :]).ravel()
            out = TrigPoly(self.shape, *_aggregate(freqs, coeffs, self.shape.moduli))
        return out

    def lp_pow(self, p) -> float:
        """Exact ``||f||_p^p`` for even ``p``."""
        if not is_even_integer(p):
            raise ValueError(f"exact sparse norms need an even integer p, got {p}")
        if self.size == 0:
            return 0.0
        return float(np.sum(np.abs(self.power(int(p) // 2).coeffs) ** 2))


def shift_table(shape: GroupShape, j: int, shifts: Sequence[int], weights=None) -> np.ndarray:
    """Characteristic function ``u -> E exp(2 pi i u v / m_j)`` of a law on ``Z_{m_j}``."""
    m = shape.moduli[j]
    shifts = np.asarray(shifts, dtype=np.int64) % m
    weights = np.full(len(shifts), 1.0 / len(shifts)) if weights is None else np.asarray(weights, float)
    u = np.arange(m)
    return (np.exp(2j * np.pi * (np.outer(u, shifts) % m) / m) * weights).sum(axis=1)


def point_tables(shape: GroupShape, v: Sequence[int]) -> list[np.ndarray]:
    v = shape.reduce(v)
    return [shift_table(shape, j, [v[j]]) for j in range(shape.n)]


class ShiftMomentForm:
    """Averaged shift differences ``E_v ||M_v f - f||_p^p`` on a fixed support.

    Each law of ``v`` yields a kernel ``K``; the average for coefficients ``c``
    is ``Re sum_q K_q prod_i c[A_qi] conj(c[B_qi])`` over index tuples with
    ``sum w_A = sum w_B``.
    """

    def __init__(self, shape: GroupShape, freqs, p, chunk: int = 20000):
        if not is_even_integer(p):
            raise ValueError(f"moment forms need an even integer p, got {p}")
        self.shape = shape
        self.freqs = np.mod(np.asarray(freqs, dtype=np.int64).reshape(-1, shape.n), shape.moduli)
        self.p = int(p)
        self.r = self.p // 2
        self.chunk = chunk
        self._build_tuples()
        bits = np.array(list(itertools.product((0, 1), repeat=2 * self.r)), dtype=np.int64)
        self._sel_a = bits[:, : self.r]
        self._sel_b = bits[:, self.r :]
        self._signs = (-1.0) ** (2 * self.r - bits.sum(axis=1))

    def _build_tuples(self):
        s = len(self.freqs)
        moduli = np.asarray(self.shape.moduli, dtype=np.int64)
        if s == 0:
            self.A = self.B = self.combos = np.zeros((0, self.r), dtype=np.int64)
            self.ia = self.ib = np.zeros(0, dtype=np.int64)
            self.weights = np.zeros(0)
            return
        # unordered index multisets; permutations folded into a weight
        combos = np.array(
            list(itertools.combinations_with_replacement(range(s), self.r)), dtype=np.int64
        )
        mult = np.array([_perm_count(c) for c in combos], dtype=float)
        keys = np.mod(self.freqs[combos].sum(axis=1), moduli)
        _, inv = np.unique(keys, axis=0, return_inverse=True)
        inv = inv.ravel()
        order = np.argsort(inv, kind="stable")
        bounds = np.flatnonzero(np.diff(inv[order])) + 1
        IA, IB, wt = [], [], []
        for grp in np.split(order, bounds):
            ia, ib = np.meshgrid(grp, grp, indexing="ij")
            IA.append(ia.ravel())
            IB.append(ib.ravel())
            wt.append((mult[ia] * mult[ib]).ravel())
        self.combos = combos
        self.ia = np.concatenate(IA)
        self.ib = np.concatenate(IB)
        self.A = combos[self.ia]
        self.B = combos[self.ib]
        self.weights = np.concatenate(wt)

    @property
    def size(self) -> int:
        return len(self.weights)

    def _chunks(self):
        for start in range(0, self.size, self.chunk):
            yield slice(start, min(start + self.chunk, self.size))

    def _coord_values(self, sl, j, table):
        w = self.freqs[:, j]
        u = w[self.A[sl]] @ self._sel_a.T - w[self.B[sl]] @ self._sel_b.T
        return table[np.mod(u, self.shape.moduli[j])]

    def kernel(self, tables: Sequence[np.ndarray]) -> np.ndarray:
        """Kernel for a product law with per-coordinate characteristic tables."""
        K = np.empty(self.size, dtype=complex)
        for sl in self._chunks():
            prod = np.ones((sl.stop - sl.start, len(self._signs)), dtype=complex)
            for j, table in enumerate(tables):
                prod *= self._coord_values(sl, j, table)
            K[sl] = prod @ self._signs
        return K * self.weights

    def kernel_balanced(self, tables: Sequence[np.ndarray], k: int) -> np.ndarray:
        """Kernel for ``v = v_S`` averaged over all ``|S| = k``, coordinates in ``S`` drawn from ``tables``."""
        n = self.shape.n
        K = np.empty(self.size, dtype=complex)
        for sl in self._chunks():
            rows = sl.stop - sl.start
            e = np.zeros((k + 1, rows, len(self._signs)), dtype=complex)
            e[0] = 1.0
            for j, table in enumerate(tables):
                vals = self._coord_values(sl, j, table)
                for t in range(min(k, j + 1), 0, -1):
                    e[t] += vals * e[t - 1]
            K[sl] = (e[k] / math.comb(n, k)) @ self._signs
        return K * self.weights

    def operator(self, K: np.ndarray) -> sp.csr_matrix:
        """``K`` as a block-diagonal matrix over index multisets, for repeated evaluation."""
        n = len(self.combos)
        return sp.csr_matrix((np.asarray(K, dtype=complex), (self.ia, self.ib)), shape=(n, n))

    def evaluate(self, K, coeffs) -> np.ndarray:
        """Form value(s); ``K`` is a kernel or its :meth:`operator`, ``coeffs`` is ``(s,)`` or ``(B, s)``.

        The value is ``Re sum_ab K_ab P_a conj(P_b)`` with ``P_a`` the product of
        the coefficients in multiset ``a``.  Each row is reduced on its own, so
        its value does not depend on the batch it travels in.
        """
        op = K if sp.issparse(K) else self.operator(K)
        c = np.asarray(coeffs, dtype=complex)
        single = c.ndim == 1
        c = np.atleast_2d(c)
        if len(self.combos) == 0:
            out = np.zeros(len(c))
        else:
            P = c[:, self.combos[:, 0]]
            for i in range(1, self.r):
                P = P * c[:, self.combos[:, i]]
            Y = op @ np.ascontiguousarray(P.conj().T)
            out = (P * Y.T).real.sum(axis=1)
        return out[0] if single else out


def _perm_count(combo) -> int:
    counts = defaultdict(int)
    for c in combo:
        counts[c] += 1
    out = math.factorial(len(combo))
    for v in counts.values():
        out //= math.factorial(v)
    return out


def random_trigpoly(shape: GroupShape, s: int, seed=None, mean_zero: bool = False) -> TrigPoly:
    """``s`` distinct random frequencies with complex Gaussian coefficients."""
    rng = np.random.default_rng(seed)
    avail = shape.order - (1 if mean_zero else 0)
    if not 0 <= s <= avail:
        raise ValueError(f"cannot place {s} distinct frequencies")
    seen: set[tuple[int, ...]] = set()
    rows = []
    while len(rows) < s:
        w = tuple(int(rng.integers(m)) for m in shape.moduli)
        if w in seen or (mean_zero and not any(w)):
            continue
        seen.add(w)
        rows.append(w)
    coeffs = (rng.standard_normal(s) + 1j * rng.standard_normal(s)) / np.sqrt(2)
    return TrigPoly(shape, np.array(rows, dtype=np.int64).reshape(s, shape.n), coeffs)
