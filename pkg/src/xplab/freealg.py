"""Group algebras of free products ``Z_N * ... * Z_N`` and of free groups.

Words are tuples of letters ``(k, e)``: generator ``k`` (0-based) raised to
``e``.  In ``Z_N^{*n}`` exponents are stored in ``[1, N-1]``; in the free group
(``modulus=None``) they are nonzero integers.  An element of the group
algebra is a sparse map word -> coefficient; ``lambda(w)`` is the element
with a single unit coefficient at ``w``.  The trace is the coefficient of the
empty word.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .lattice import FOURIER, GroupShape, LatticeFunction, ResourceCapError, dft, idft
from .norms import is_even_integer

DEFAULT_SUPPORT_CAP = 10**6
PRUNE = 1e-15

Letters = tuple[tuple[int, int], ...]


class ModulusError(ValueError):
    """Raised when words or elements over different groups are combined."""


def _exp(e: int, modulus: int | None) -> int:
    return e if modulus is None else e % modulus


def _mul_letters(a: Letters, b: Letters, modulus: int | None) -> Letters:
    out = list(a)
    for k, e in b:
        if out and out[-1][0] == k:
            e2 = _exp(out[-1][1] + e, modulus)
            if e2 == 0:
                out.pop()
            else:
                out[-1] = (k, e2)
        else:
            out.append((k, e))
    return tuple(out)


def _inv_letters(a: Letters, modulus: int | None) -> Letters:
    return tuple((k, _exp(-e, modulus)) for k, e in reversed(a))


def _check_letters(letters: Letters, modulus: int | None, n: int | None = None) -> Letters:
    letters = tuple((int(k), int(e)) for k, e in letters)
    prev = None
    for k, e in letters:
        if n is not None and not 0 <= k < n:
            raise ValueError(f"generator {k} out of range for n={n}")
        if k == prev:
            raise ValueError(f"adjacent letters share generator {k}: not reduced")
        if e == 0 or (modulus is not None and not 1 <= e < modulus):
            raise ValueError(f"exponent {e} is not a canonical nonzero representative")
        prev = k
    return letters


def reduce_letters(letters: Iterable[tuple[int, int]], modulus: int | None) -> Letters:
    """Canonical reduced form of an arbitrary letter sequence."""
    out: Letters = ()
    for k, e in letters:
        e = _exp(int(e), modulus)
        if e != 0:
            out = _mul_letters(out, ((int(k), e),), modulus)
    return out


@dataclass(frozen=True)
class ReducedWord:
    letters: Letters
    modulus: int | None

    def __post_init__(self):
        if self.modulus is not None and self.modulus < 2:
            raise ValueError("modulus must be >= 2 or None")
        object.__setattr__(self, "letters", _check_letters(self.letters, self.modulus))

    @classmethod
    def identity(cls, modulus: int | None) -> "ReducedWord":
        return cls((), modulus)

    @classmethod
    def parse(cls, letters: Iterable[tuple[int, int]], modulus: int | None) -> "ReducedWord":
        """Reduce an arbitrary letter sequence."""
        return cls(reduce_letters(letters, modulus), modulus)

    def __mul__(self, other: "ReducedWord") -> "ReducedWord":
        return word_mul(self, other)

    def inverse(self) -> "ReducedWord":
        return ReducedWord(_inv_letters(self.letters, self.modulus), self.modulus)

    def __len__(self) -> int:
        return len(self.letters)

    def exponent_sums(self, n: int) -> np.ndarray:
        return exponent_sums(self.letters, n)


def exponent_sums(letters: Letters, n: int) -> np.ndarray:
    s = np.zeros(n, dtype=np.int64)
    for k, e in letters:
        s[k] += e
    return s


def word_mul(w: ReducedWord, v: ReducedWord) -> ReducedWord:
    if w.modulus != v.modulus:
        raise ModulusError(f"moduli differ: {w.modulus} vs {v.modulus}")
    return ReducedWord(_mul_letters(w.letters, v.letters, w.modulus), w.modulus)


@dataclass(frozen=True, eq=False)
class FreeElement:
    """Finitely supported element of the group algebra of ``Z_modulus^{*n}`` (or ``F_n``)."""

    n: int
    modulus: int | None
    coeffs: Mapping[Letters, complex] = field(repr=False)
    cap: int = DEFAULT_SUPPORT_CAP

    def __post_init__(self):
        clean = {}
        for w, c in self.coeffs.items():
            letters = w.letters if isinstance(w, ReducedWord) else w
            letters = _check_letters(letters, self.modulus, self.n)
            c = complex(c)
            if abs(c) > PRUNE:
                clean[letters] = clean.get(letters, 0) + c
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def _raw(cls, n, modulus, coeffs, cap) -> "FreeElement":
        # trusted constructor for already canonical words
        obj = object.__new__(cls)
        object.__setattr__(obj, "n", n)
        object.__setattr__(obj, "modulus", modulus)
        object.__setattr__(obj, "coeffs", {w: c for w, c in coeffs.items() if abs(c) > PRUNE})
        object.__setattr__(obj, "cap", cap)
        return obj

    @classmethod
    def lam(cls, word, n: int, modulus: int | None, coeff: complex = 1.0) -> "FreeElement":
        """``coeff * lambda(word)``; ``word`` may be unreduced letters."""
        letters = word.letters if isinstance(word, ReducedWord) else reduce_letters(word, modulus)
        return cls(n, modulus, {letters: coeff})

    @classmethod
    def identity(cls, n: int, modulus: int | None) -> "FreeElement":
        return cls(n, modulus, {(): 1.0})

    @property
    def support(self) -> list[Letters]:
        return list(self.coeffs)

    def _check(self, other: "FreeElement"):
        if (self.n, self.modulus) != (other.n, other.modulus):
            raise ModulusError("elements live in different group algebras")

    def __add__(self, other):
        if not isinstance(other, FreeElement):
            return NotImplemented
        self._check(other)
        out = dict(self.coeffs)
        for w, c in other.coeffs.items():
            out[w] = out.get(w, 0) + c
        return FreeElement._raw(self.n, self.modulus, out, self.cap)

    def __neg__(self):
        return FreeElement._raw(self.n, self.modulus, {w: -c for w, c in self.coeffs.items()}, self.cap)

    def __sub__(self, other):
        if not isinstance(other, FreeElement):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, FreeElement):
            return algebra_mul(self, other)
        if np.isscalar(other):
            return FreeElement._raw(
                self.n, self.modulus, {w: c * other for w, c in self.coeffs.items()}, self.cap
            )
        return NotImplemented

    def __rmul__(self, c):
        if np.isscalar(c):
            return self * c
        return NotImplemented

    def coeff(self, word) -> complex:
        letters = word.letters if isinstance(word, ReducedWord) else tuple(word)
        return self.coeffs.get(letters, 0j)

    def l2_squared(self) -> float:
        return float(sum(abs(c) ** 2 for c in self.coeffs.values()))


def algebra_mul(a: FreeElement, b: FreeElement) -> FreeElement:
    """Convolution ``(ab)(u) = sum_{wv=u} a(w) b(v)``."""
    a._check(b)
    cap = min(a.cap, b.cap)
    out: dict[Letters, complex] = defaultdict(complex)
    mod = a.modulus
    for w, cw in a.coeffs.items():
        for v, cv in b.coeffs.items():
            out[_mul_letters(w, v, mod)] += cw * cv
        if len(out) > cap:
            raise ResourceCapError(f"product support exceeds {cap} words")
    return FreeElement._raw(a.n, mod, out, cap)


def adjoint(a: FreeElement) -> FreeElement:
    """``a*(w) = conj(a(w^{-1}))``."""
    return FreeElement._raw(
        a.n, a.modulus, {_inv_letters(w, a.modulus): np.conj(c) for w, c in a.coeffs.items()}, a.cap
    )


def trace(a: FreeElement) -> complex:
    return complex(a.coeffs.get((), 0j))


def _grid(modulus: int | None, m: int | None) -> int:
    if m is not None:
        return 8 * m
    if modulus is None:
        raise ValueError("free-group characters need the grid parameter m")
    return modulus


def chi_u(w, u: Sequence[int], m: int | None = None) -> complex:
    """``exp(2 pi i / 8m * sum_j u_j * (exponent sum of generator j in w))``.

    ``w`` is a :class:`ReducedWord` or a letter tuple.  ``m`` defaults to
    ``modulus / 8`` for finite moduli.
    """
    if isinstance(w, ReducedWord):
        N = _grid(w.modulus, m)
        letters = w.letters
    else:
        if m is None:
            raise ValueError("m is required for raw letter tuples")
        N, letters = 8 * m, w
    total = 0
    for k, e in letters:
        total += int(u[k]) * e
    return complex(np.exp(2j * np.pi * (total % N) / N))


def chi_theta(w, theta: Sequence[float]) -> complex:
    """Free-group character ``exp(2 pi i sum_j theta_j s_j(w))`` for a torus point ``theta``."""
    letters = w.letters if isinstance(w, ReducedWord) else w
    total = 0.0
    for k, e in letters:
        total += theta[k] * e
    return complex(np.exp(2j * np.pi * total))


def multiplier_Mu(a: FreeElement, u: Sequence[int], m: int | None = None) -> FreeElement:
    """``lambda(w) -> chi_u(w) lambda(w)``."""
    if len(u) != a.n:
        raise ValueError(f"u has {len(u)} entries, expected {a.n}")
    N = _grid(a.modulus, m)
    if a.modulus is not None and a.modulus % N:
        raise ValueError(f"grid {N} is not compatible with modulus {a.modulus}")
    u = [int(x) % N for x in u]
    out = {}
    for w, c in a.coeffs.items():
        total = 0
        for k, e in w:
            total += u[k] * e
        out[w] = c * np.exp(2j * np.pi * (total % N) / N)
    return FreeElement._raw(a.n, a.modulus, out, a.cap)


def freelp_pow_even(a: FreeElement, p) -> float:
    """``tau((a* a)^{p/2})``, exact up to rounding for even ``p``."""
    if not is_even_integer(p):
        raise ValueError(f"exact free L_p norms need an even integer p, got {p}")
    r = int(p) // 2
    if not a.coeffs:
        return 0.0
    b = algebra_mul(adjoint(a), a)
    # tau(b^r) = ||c||_2^2 with c = b^{r/2} (r even) or c = a b^{(r-1)/2} (r odd)
    c = a if r % 2 else FreeElement.identity(a.n, a.modulus)
    for _ in range(r // 2):
        c = algebra_mul(c, b)
    return c.l2_squared()


def freelp_norm_even(a: FreeElement, p) -> float:
    return freelp_pow_even(a, p) ** (1.0 / p)


def random_element(
    n: int,
    modulus: int | None,
    size: int = 6,
    max_len: int = 3,
    seed=None,
    max_exp: int = 3,
) -> FreeElement:
    """Random element with ``size`` Gaussian coefficients on random reduced words."""
    rng = np.random.default_rng(seed)
    coeffs: dict[Letters, complex] = {}
    while len(coeffs) < size:
        length = int(rng.integers(0, max_len + 1))
        letters = []
        prev = None
        for _ in range(length):
            choices = [k for k in range(n) if k != prev]
            if not choices:
                break
            k = int(rng.choice(choices))
            if modulus is None:
                e = int(rng.integers(1, max_exp + 1)) * int(rng.choice([-1, 1]))
            else:
                e = int(rng.integers(1, modulus))
            letters.append((k, e))
            prev = k
        coeffs[tuple(letters)] = complex(rng.standard_normal(), rng.standard_normal())
        if modulus is not None and n == 1 and len(coeffs) >= modulus:
            break
    return FreeElement(n, modulus, coeffs)


def random_word(n: int, modulus: int | None, max_len: int, rng, max_exp: int = 3) -> ReducedWord:
    letters = []
    prev = None
    for _ in range(int(rng.integers(0, max_len + 1))):
        k = int(rng.choice([j for j in range(n) if j != prev]))
        e = int(rng.integers(1, modulus)) if modulus else int(rng.integers(1, max_exp + 1)) * int(rng.choice([-1, 1]))
        letters.append((k, e))
        prev = k
    return ReducedWord(tuple(letters), modulus)


def to_lattice(a: FreeElement) -> LatticeFunction:
    """For ``n = 1``: the function on the dual ``Z_N`` with Fourier coefficients ``a(g^l)``."""
    if a.n != 1 or a.modulus is None:
        raise ValueError("only single-factor finite products are abelian")
    F = np.zeros(a.modulus, dtype=complex)
    for w, c in a.coeffs.items():
        F[w[0][1] if w else 0] += c
    return idft(LatticeFunction.from_array(GroupShape((a.modulus,)), F, FOURIER))


def from_lattice(f: LatticeFunction) -> FreeElement:
    """Inverse of :func:`to_lattice`."""
    if f.shape.n != 1 or f.dim != 1:
        raise ValueError("expected a scalar function on a single cyclic group")
    N = f.shape.moduli[0]
    F = dft(f).scalar
    return FreeElement(1, N, {((0, l),) if l else (): F[l] for l in range(N)})
