"""Functions on finite products of cyclic groups and their Fourier analysis.

A group ``Z_{m_1} x ... x Z_{m_n}`` is described by a :class:`GroupShape`.
Points and frequencies are plain integer tuples, reduced coordinatewise.
Subsets of coordinates are iterables of 0-based coordinate indices.

Normalization: position space carries the probability Haar measure and
frequency space the counting measure, so that

    F(w) = 1/|G| sum_x f(x) conj(chi_w(x)),    f(x) = sum_w F(w) chi_w(x),

with ``chi_w(x) = exp(2 pi i sum_j w_j x_j / m_j)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

DEFAULT_CAP = 10**8

POSITION = "position"
FOURIER = "fourier"


class ResourceCapError(RuntimeError):
    """Raised before allocating an object larger than the configured cap."""


class SideError(ValueError):
    """Raised when an operation receives a function on the wrong side."""


_cap = DEFAULT_CAP


def get_cap() -> int:
    return _cap


def set_cap(cap: int | None) -> int:
    """Set the global scalar-count cap; ``None`` restores the default. Returns the old cap."""
    global _cap
    old = _cap
    _cap = DEFAULT_CAP if cap is None else int(cap)
    return old


@dataclass(frozen=True)
class GroupShape:
    """The group ``Z_{m_1} x ... x Z_{m_n}``."""

    moduli: tuple[int, ...]

    def __post_init__(self):
        moduli = tuple(int(m) for m in self.moduli)
        if len(moduli) < 1:
            raise ValueError("a group shape needs at least one coordinate")
        if any(m < 1 for m in moduli):
            raise ValueError(f"moduli must be positive, got {moduli}")
        object.__setattr__(self, "moduli", moduli)

    @classmethod
    def cyclic(cls, modulus: int, n: int) -> "GroupShape":
        return cls((modulus,) * n)

    @property
    def n(self) -> int:
        return len(self.moduli)

    @property
    def order(self) -> int:
        return math.prod(self.moduli)

    def check_cap(self, dim: int = 1, cap: int | None = None) -> None:
        cap = _cap if cap is None else cap
        size = self.order * dim * dim
        if size > cap:
            raise ResourceCapError(
                f"group of order {self.order} with {dim}x{dim} fibers needs {size} scalars (cap {cap})"
            )

    def reduce(self, x: Sequence[int]) -> tuple[int, ...]:
        if len(x) != self.n:
            raise ValueError(f"index {tuple(x)} does not match shape {self.moduli}")
        return tuple(int(a) % m for a, m in zip(x, self.moduli))

    def add(self, x: Sequence[int], y: Sequence[int]) -> tuple[int, ...]:
        return self.reduce([a + b for a, b in zip(self.reduce(x), self.reduce(y))])

    def neg(self, x: Sequence[int]) -> tuple[int, ...]:
        return self.reduce([-a for a in x])

    def scale(self, c: int, x: Sequence[int]) -> tuple[int, ...]:
        return self.reduce([c * a for a in x])

    @property
    def zero(self) -> tuple[int, ...]:
        return (0,) * self.n

    def unit(self, j: int) -> tuple[int, ...]:
        e = [0] * self.n
        e[j] = 1
        return self.reduce(e)

    def centered(self, x: Sequence[int]) -> tuple[int, ...]:
        """Representatives in ``(-m_j/2, m_j/2]``."""
        out = []
        for a, m in zip(self.reduce(x), self.moduli):
            out.append(a - m if a > m // 2 else a)
        return tuple(out)

    def points(self) -> np.ndarray:
        """All points as an ``(order, n)`` integer array in C order."""
        grids = np.indices(self.moduli).reshape(self.n, -1)
        return grids.T.copy()


def truncate(x: Sequence[int], S: Iterable[int]) -> tuple[int, ...]:
    """Zero the coordinates of ``x`` outside ``S``."""
    S = set(S)
    return tuple(a if j in S else 0 for j, a in enumerate(x))


def _check_subset(S: Iterable[int], n: int) -> frozenset[int]:
    S = frozenset(int(j) for j in S)
    if any(j < 0 or j >= n for j in S):
        raise ValueError(f"subset {sorted(S)} is not contained in range({n})")
    return S


@dataclass(frozen=True, eq=False)
class LatticeFunction:
    """Dense ``d x d``-matrix valued function on a :class:`GroupShape`.

    ``values`` has shape ``shape.moduli + (d, d)``; scalars use ``d = 1``.
    """

    shape: GroupShape
    values: np.ndarray = field(repr=False)
    side: str = POSITION

    def __post_init__(self):
        if self.side not in (POSITION, FOURIER):
            raise ValueError(f"unknown side {self.side!r}")
        v = np.asarray(self.values, dtype=complex)
        n = self.shape.n
        if v.shape[:n] != self.shape.moduli or v.ndim != n + 2 or v.shape[-1] != v.shape[-2]:
            raise ValueError(
                f"values of shape {v.shape} do not fit {self.shape.moduli} with square blocks"
            )
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_array(cls, shape: GroupShape, arr, side: str = POSITION) -> "LatticeFunction":
        """Build from a scalar array of shape ``moduli`` or a block array ``moduli + (d, d)``."""
        arr = np.asarray(arr, dtype=complex)
        if arr.shape == shape.moduli:
            arr = arr[..., None, None]
        shape.check_cap(arr.shape[-1] if arr.ndim == shape.n + 2 else 1)
        return cls(shape, arr, side)

    @classmethod
    def from_callable(cls, shape: GroupShape, fn, dim: int = 1) -> "LatticeFunction":
        shape.check_cap(dim)
        pts = shape.points()
        vals = np.array([np.asarray(fn(tuple(p)), dtype=complex).reshape(dim, dim) for p in pts])
        return cls(shape, vals.reshape(shape.moduli + (dim, dim)))

    @classmethod
    def zeros(cls, shape: GroupShape, dim: int = 1, side: str = POSITION) -> "LatticeFunction":
        shape.check_cap(dim)
        return cls(shape, np.zeros(shape.moduli + (dim, dim), dtype=complex), side)

    @property
    def dim(self) -> int:
        return self.values.shape[-1]

    @property
    def scalar(self) -> np.ndarray:
        """Scalar values; only for ``dim == 1``."""
        if self.dim != 1:
            raise ValueError("function is matrix valued")
        return self.values[..., 0, 0]

    def __getitem__(self, x) -> np.ndarray:
        return self.values[self.shape.reduce(x)]

    def _same(self, other: "LatticeFunction"):
        if not isinstance(other, LatticeFunction):
            return NotImplemented
        if other.shape != self.shape or other.side != self.side or other.dim != self.dim:
            raise ValueError("incompatible lattice functions")
        return other

    def __add__(self, other):
        if self._same(other) is NotImplemented:
            return NotImplemented
        return LatticeFunction(self.shape, self.values + other.values, self.side)

    def __sub__(self, other):
        if self._same(other) is NotImplemented:
            return NotImplemented
        return LatticeFunction(self.shape, self.values - other.values, self.side)

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return LatticeFunction(self.shape, self.values * c, self.side)

    __rmul__ = __mul__

    def __neg__(self):
        return LatticeFunction(self.shape, -self.values, self.side)

    def mean(self) -> np.ndarray:
        """Haar average, a ``d x d`` block."""
        if self.side != POSITION:
            raise SideError("mean of a Fourier-side function; use the coefficient at 0")
        return self.values.reshape(-1, self.dim, self.dim).mean(axis=0)

    def allclose(self, other: "LatticeFunction", tol: float = 1e-10) -> bool:
        return relative_error(self, other) <= tol


def relative_error(f: LatticeFunction, g: LatticeFunction) -> float:
    """Frobenius distance relative to the larger of the two norms (absolute below 1)."""
    diff = np.linalg.norm((f.values - g.values).ravel())
    scale = max(np.linalg.norm(f.values.ravel()), np.linalg.norm(g.values.ravel()), 1.0)
    return float(diff / scale)


def character_eval(w: Sequence[int], x: Sequence[int], shape: GroupShape) -> complex:
    """``chi_w(x) = exp(2 pi i sum_j w_j x_j / m_j)``."""
    w = shape.reduce(w)
    x = shape.reduce(x)
    # reduce the phase exactly in rationals before exponentiating
    num = 0
    den = 1
    for a, b, m in zip(w, x, shape.moduli):
        num = num * m + a * b * den
        den *= m
    num %= den
    return complex(np.exp(2j * np.pi * num / den))


def character(shape: GroupShape, w: Sequence[int], block=None) -> LatticeFunction:
    """The function ``chi_w`` (times the matrix ``block`` if given)."""
    shape.check_cap()
    w = np.array(shape.reduce(w))
    phase = np.zeros(shape.moduli)
    for j, m in enumerate(shape.moduli):
        idx = [None] * shape.n
        idx[j] = slice(None)
        phase = phase + (w[j] * np.arange(m) % m / m)[tuple(idx)]
    vals = np.exp(2j * np.pi * phase)
    if block is None:
        return LatticeFunction.from_array(shape, vals)
    block = np.asarray(block, dtype=complex)
    return LatticeFunction.from_array(shape, vals[..., None, None] * block)


def _axis_matrix(m: int, sign: int) -> np.ndarray:
    k = np.arange(m)
    return np.exp(sign * 2j * np.pi * (np.outer(k, k) % m) / m)


def _apply_axes(values: np.ndarray, moduli: tuple[int, ...], sign: int, scale: bool) -> np.ndarray:
    out = values
    for j, m in enumerate(moduli):
        mat = _axis_matrix(m, sign)
        if scale:
            mat = mat / m
        out = np.moveaxis(np.tensordot(mat, out, axes=([1], [j])), 0, j)
    return out


def dft(f: LatticeFunction) -> LatticeFunction:
    """Fourier coefficients, one direct transform per axis."""
    if f.side != POSITION:
        raise SideError("dft expects a position-side function")
    return LatticeFunction(f.shape, _apply_axes(f.values, f.shape.moduli, -1, True), FOURIER)


def idft(F: LatticeFunction) -> LatticeFunction:
    if F.side != FOURIER:
        raise SideError("idft expects a Fourier-side function")
    return LatticeFunction(F.shape, _apply_axes(F.values, F.shape.moduli, 1, False), POSITION)


_SPARSE_RE = re.compile(r"sparse-fourier\((\d+)\)")


def random_function(
    shape: GroupShape,
    dim: int = 1,
    distribution: str = "complex-gaussian",
    seed=None,
    s: int | None = None,
    cap: int | None = None,
) -> LatticeFunction:
    """Random position-side function.

    ``complex-gaussian``: iid entries with ``E|z|^2 = 1``.
    ``rademacher-coefficients``: every Fourier coefficient entry is ``+-1``.
    ``sparse-fourier`` (or ``"sparse-fourier(s)"``): ``s`` distinct frequencies carry
    complex Gaussian blocks, all others vanish.
    """
    shape.check_cap(dim, cap)
    rng = np.random.default_rng(seed)
    full = shape.moduli + (dim, dim)
    match = _SPARSE_RE.fullmatch(distribution)
    if match:
        distribution, s = "sparse-fourier", int(match.group(1))
    if distribution == "complex-gaussian":
        vals = (rng.standard_normal(full) + 1j * rng.standard_normal(full)) / np.sqrt(2)
        return LatticeFunction(shape, vals)
    if distribution == "rademacher-coefficients":
        coeffs = rng.choice([-1.0, 1.0], size=full)
        return idft(LatticeFunction(shape, coeffs, FOURIER))
    if distribution == "sparse-fourier":
        if s is None or not 0 <= s <= shape.order:
            raise ValueError(f"sparse-fourier needs 0 <= s <= {shape.order}, got {s}")
        coeffs = np.zeros((shape.order, dim, dim), dtype=complex)
        where = rng.choice(shape.order, size=s, replace=False)
        blocks = (rng.standard_normal((s, dim, dim)) + 1j * rng.standard_normal((s, dim, dim))) / np.sqrt(2)
        # a Gaussian block is nonzero almost surely; guard the measure-zero case
        blocks[np.all(blocks == 0, axis=(1, 2))] = 1.0
        coeffs[where] = blocks
        return idft(LatticeFunction(shape, coeffs.reshape(full), FOURIER))
    raise ValueError(f"unknown distribution {distribution!r}")
