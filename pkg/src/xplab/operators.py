"""Conditional expectations, derivatives, multiplier families and eta-maps.

Operators act on :class:`~xplab.lattice.LatticeFunction` (dense) and, where
it makes sense, on :class:`~xplab.sparse.TrigPoly` and
:class:`~xplab.freealg.FreeElement`.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import freealg
from .freealg import FreeElement
from .lattice import (
    FOURIER,
    POSITION,
    GroupShape,
    LatticeFunction,
    SideError,
    _check_subset,
    dft,
    idft,
    random_function,
)
from .norms import lp_pow
from .sparse import TrigPoly, random_trigpoly

SPECTRAL = "spectral"
HYPERCUBE = "hypercube-difference"
CLASSICAL = "classical-torus"

_DENSE_SAMPLE_LIMIT = 4096


def _position(f: LatticeFunction):
    if f.side != POSITION:
        raise SideError("expected a position-side function")


def lp_pow_any(f, p) -> float:
    """``||f||_p^p`` for dense, sparse or free-algebra elements."""
    if isinstance(f, LatticeFunction):
        return lp_pow(f, p)
    if isinstance(f, TrigPoly):
        return f.lp_pow(p)
    if isinstance(f, FreeElement):
        return freealg.freelp_pow_even(f, p)
    raise TypeError(f"cannot take norms of {type(f).__name__}")


def translate(f, gamma: Sequence[int]):
    """``M_gamma f(x) = f(x + gamma)``."""
    if isinstance(f, TrigPoly):
        return f.translate(gamma)
    _position(f)
    gamma = f.shape.reduce(gamma)
    vals = np.roll(f.values, shift=[-g for g in gamma], axis=tuple(range(f.shape.n)))
    return LatticeFunction(f.shape, vals)


def cond_expect(f, S: Iterable[int], method: str = "average"):
    """``E_{[n] minus S} f``: average out every coordinate outside ``S``.

    ``method="fourier"`` computes the same operator as the Fourier truncation
    to frequencies supported in ``S``.
    """
    S = _check_subset(S, f.shape.n)
    if isinstance(f, TrigPoly):
        return f.restrict(S)
    _position(f)
    out_axes = tuple(j for j in range(f.shape.n) if j not in S)
    if method == "average":
        if not out_axes:
            return f
        avg = f.values.mean(axis=out_axes, keepdims=True)
        return LatticeFunction(f.shape, np.broadcast_to(avg, f.values.shape))
    if method == "fourier":
        F = dft(f).values.copy()
        for j in out_axes:
            idx = [slice(None)] * F.ndim
            idx[j] = slice(1, None)
            F[tuple(idx)] = 0
        return idft(LatticeFunction(f.shape, F, FOURIER))
    raise ValueError(f"unknown method {method!r}")


def _centered_freqs(m: int) -> np.ndarray:
    k = np.arange(m)
    return np.where(k > m // 2, k - m, k)


def derivative(f, j: int, mode: str = SPECTRAL):
    """Directional derivative in coordinate ``j``.

    ``spectral``: ``chi_w -> [w_j != 0] chi_w``, i.e. ``id - E_{j}``.
    ``hypercube-difference``: ``f(x) - f(x + e_j)`` on a ``Z_2`` axis.
    ``classical-torus``: Fourier multiplier ``2 pi i w_j / m_j`` with centered ``w_j``.
    """
    n = f.shape.n
    if not 0 <= j < n:
        raise ValueError(f"coordinate {j} out of range")
    m = f.shape.moduli[j]
    if mode == HYPERCUBE and m != 2:
        raise ValueError(f"hypercube differences need modulus 2 on axis {j}, got {m}")
    if isinstance(f, TrigPoly):
        w = f.freqs[:, j]
        if mode == SPECTRAL:
            sym = (w != 0).astype(float)
        elif mode == HYPERCUBE:
            sym = 1.0 - (-1.0) ** w
        elif mode == CLASSICAL:
            sym = 2j * np.pi * _centered_freqs(m)[w] / m
        else:
            raise ValueError(f"unknown derivative mode {mode!r}")
        return f.multiply_symbol(sym)
    _position(f)
    if mode == SPECTRAL:
        return f - LatticeFunction(f.shape, np.broadcast_to(f.values.mean(axis=j, keepdims=True), f.values.shape))
    if mode == HYPERCUBE:
        return LatticeFunction(f.shape, f.values - np.roll(f.values, -1, axis=j))
    if mode == CLASSICAL:
        F = dft(f).values
        shape = [1] * F.ndim
        shape[j] = m
        sym = (2j * np.pi * _centered_freqs(m) / m).reshape(shape)
        return idft(LatticeFunction(f.shape, F * sym, FOURIER))
    raise ValueError(f"unknown derivative mode {mode!r}")


def eta_beta(y: int, ell: int) -> int:
    """``y - ell`` for ``0 <= y < ell`` and ``y - ell + 1`` for ``ell <= y < 2 ell``."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if not 0 <= y < 2 * ell:
        raise ValueError(f"y={y} outside [0, {2 * ell})")
    return y - ell if y < ell else y - (ell - 1)


@dataclass(frozen=True, eq=False)
class EtaMap:
    """Coordinatewise map ``eta: H -> Gamma``; ``table[j][y_j]`` is the ``j``-th coordinate.

    Construction fails unless every coordinate law is symmetric, which is
    equivalent to ``eta_S(y)`` and ``-eta_S(y)`` being equidistributed for
    every ``S`` (coordinates of uniform ``y`` are independent).
    """

    kind: str
    source: GroupShape
    target: GroupShape
    table: tuple = field(repr=False)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.source.n != self.target.n:
            raise ValueError("source and target must have the same number of factors")
        table = []
        for j, (h, g) in enumerate(zip(self.source.moduli, self.target.moduli)):
            col = np.mod(np.asarray(self.table[j], dtype=np.int64), g)
            if col.shape != (h,):
                raise ValueError(f"table column {j} must have {h} entries")
            col.flags.writeable = False
            table.append(col)
        object.__setattr__(self, "table", tuple(table))
        bad = [j for j in range(self.n) if not self._coordinate_symmetric(j)]
        if bad:
            raise ValueError(f"eta fails symmetric inclusion on coordinates {bad}")

    @property
    def n(self) -> int:
        return self.source.n

    @classmethod
    def beta(cls, ell: int, n: int, m: int) -> "EtaMap":
        """``Z_{2 ell}^n -> Z_{8 ell m}^n`` via ``beta_ell`` in every coordinate."""
        col = [eta_beta(y, ell) for y in range(2 * ell)]
        return cls(
            f"beta({ell})",
            GroupShape.cyclic(2 * ell, n),
            GroupShape.cyclic(8 * ell * m, n),
            tuple([col] * n),
            {"ell": ell, "m": m},
        )

    @classmethod
    def sign(cls, n: int, modulus: int, step: int = 1) -> "EtaMap":
        """``Z_2^n -> Z_modulus^n`` with ``0 -> -step`` and ``1 -> +step``."""
        return cls(
            "sign",
            GroupShape.cyclic(2, n),
            GroupShape.cyclic(modulus, n),
            tuple([[-step, step]] * n),
            {"step": step},
        )

    @classmethod
    def scaled_identity(cls, n: int, m: int, ell: int) -> "EtaMap":
        """``y -> y / 4m`` on the torus, sampled at the symmetric points ``beta_ell(s) / 2 ell``.

        On the grid ``Z_{8 ell m}`` the shift ``y / 4m`` is ``beta_ell(s)`` steps.
        """
        base = cls.beta(ell, n, m)
        return cls("scaled-identity(4m)", base.source, base.target, base.table, {"ell": ell, "m": m})

    @classmethod
    def custom(cls, source: GroupShape, target: GroupShape, table) -> "EtaMap":
        return cls("custom-table", source, target, tuple(table))

    def __call__(self, y: Sequence[int]) -> tuple[int, ...]:
        y = self.source.reduce(y)
        return tuple(int(self.table[j][y[j]]) for j in range(self.n))

    def truncated(self, y: Sequence[int], S: Iterable[int]) -> tuple[int, ...]:
        """``eta_S(y)``: ``eta(y)`` with coordinates outside ``S`` set to zero."""
        S = set(S)
        full = self(y)
        return tuple(v if j in S else 0 for j, v in enumerate(full))

    def centered(self, j: int) -> np.ndarray:
        g = self.target.moduli[j]
        col = self.table[j]
        return np.where(col > g // 2, col - g, col)

    def span(self) -> int:
        """Largest spread ``max eta_j - min eta_j`` of centered values over coordinates."""
        return int(max(np.ptp(self.centered(j)) for j in range(self.n)))

    def coordinate_law(self, j: int, scale: int = 1) -> Counter:
        g = self.target.moduli[j]
        return Counter(int(v) for v in (scale * self.table[j]) % g)

    def _coordinate_symmetric(self, j: int) -> bool:
        g = self.target.moduli[j]
        law = self.coordinate_law(j)
        return law == Counter({(-v) % g: c for v, c in law.items()})

    def symmetric_for_subset(self, S: Iterable[int]) -> bool:
        """Exhaustive histogram comparison of ``eta_S(y)`` and ``-eta_S(y)`` over all of ``H``."""
        S = list(S)
        plus, minus = Counter(), Counter()
        for y in itertools.product(*(range(h) for h in self.source.moduli)):
            v = self.truncated(y, S)
            plus[v] += 1
            minus[self.target.neg(v)] += 1
        return plus == minus

    def shifts(self, S: Iterable[int], scale: int) -> Counter:
        """Law of ``scale * eta_S(y)`` for uniform ``y``, as counts over ``prod_{j in S} |H_j|`` points."""
        S = sorted(S)
        out: Counter = Counter()
        cols = [self.table[j] for j in S]
        for vals in itertools.product(*cols):
            v = [0] * self.n
            for j, a in zip(S, vals):
                v[j] = scale * int(a)
            out[self.target.reduce(v)] += 1
        return out

    def points(self):
        return itertools.product(*(range(h) for h in self.source.moduli))


@dataclass(frozen=True, eq=False)
class MultiplierFamily:
    """A family ``{M_gamma}`` indexed by the parameter group ``Gamma``."""

    param_shape: GroupShape
    action: Callable = field(repr=False)
    descriptor: str = "custom"
    sampler: Callable | None = field(default=None, repr=False)

    def apply(self, f, gamma: Sequence[int]):
        return self.action(f, self.param_shape.reduce(gamma))

    def power(self, f, gamma: Sequence[int], k: int):
        """``M_gamma^k f`` by repeated application; negative ``k`` uses ``M_{-gamma}``."""
        step = gamma if k >= 0 else self.param_shape.neg(gamma)
        for _ in range(abs(k)):
            f = self.apply(f, step)
        return f

    @classmethod
    def translations(cls, shape: GroupShape) -> "MultiplierFamily":
        def sampler(rng):
            if shape.order <= _DENSE_SAMPLE_LIMIT:
                return random_function(shape, seed=rng)
            return random_trigpoly(shape, 8, seed=rng)

        return cls(shape, translate, "translation", sampler)

    @classmethod
    def modulations(cls, shape: GroupShape) -> "MultiplierFamily":
        """``M_gamma f = chi_gamma f`` (translation on the Fourier side)."""
        from .lattice import character

        def act(f, gamma):
            chi = character(shape, gamma).values
            return LatticeFunction(f.shape, f.values * chi)

        def sampler(rng):
            return random_function(shape, seed=rng)

        return cls(shape, act, "modulation", sampler)

    @classmethod
    def free_characters(cls, n: int, m: int, modulus: int | None = None) -> "MultiplierFamily":
        """``M_u`` on ``Z_{8m}^{*n}`` (default) or on ``F_n`` when ``modulus=None`` is passed explicitly."""
        mod = 8 * m if modulus is None and m else modulus

        def act(a, u):
            return freealg.multiplier_Mu(a, u, m)

        def sampler(rng):
            return freealg.random_element(n, mod, seed=rng)

        return cls(GroupShape.cyclic(8 * m, n), act, "free-character", sampler)

    @classmethod
    def free_group(cls, n: int, m: int) -> "MultiplierFamily":
        """Torus-point characters on ``F_n`` sampled on the grid ``Z_{8m}^n``."""

        def act(a, u):
            return freealg.multiplier_Mu(a, u, m)

        def sampler(rng):
            return freealg.random_element(n, None, seed=rng)

        return cls(GroupShape.cyclic(8 * m, n), act, "free-group-character", sampler)


def default_family(f, m: int | None = None) -> MultiplierFamily:
    if isinstance(f, (LatticeFunction, TrigPoly)):
        return MultiplierFamily.translations(f.shape)
    if isinstance(f, FreeElement):
        if f.modulus is None:
            if m is None:
                raise ValueError("free-group elements need an explicit grid parameter m")
            return MultiplierFamily.free_group(f.n, m)
        return MultiplierFamily.free_characters(f.n, f.modulus // 8 if m is None else m)
    raise TypeError(f"no default multiplier family for {type(f).__name__}")


def _average(items: list[tuple[object, int]]):
    total = sum(c for _, c in items)
    acc = None
    for g, c in items:
        term = g * (c / total)
        acc = term if acc is None else acc + term
    return acc


def t_s_average(f, S: Iterable[int], eta: EtaMap, family: MultiplierFamily | None = None):
    """``T_S f``: the average of ``M_{2 eta_S(y)} f`` over uniform ``y`` in ``H``."""
    family = family or default_family(f)
    S = _check_subset(S, eta.n)
    law = eta.shifts(S, 2)
    return _average([(family.apply(f, v), c) for v, c in sorted(law.items())])


def h_map(f, eta: EtaMap, y: Sequence[int], family: MultiplierFamily | None = None):
    """``h(y) = M_{2 eta(y)} f - M_{-2 eta(y)} f``."""
    family = family or default_family(f)
    v = eta(y)
    return family.apply(f, eta.target.scale(2, v)) - family.apply(f, eta.target.scale(-2, v))


def h_expect(f, eta: EtaMap, S: Iterable[int], y: Sequence[int], family: MultiplierFamily | None = None):
    """``(E_{[n] minus S} h)(y)``: average of ``h`` over the coordinates of ``y`` outside ``S``."""
    family = family or default_family(f)
    S = set(S)
    y = eta.source.reduce(y)
    free = [j for j in range(eta.n) if j not in S]
    items = []
    for z in itertools.product(*(range(eta.source.moduli[j]) for j in free)):
        yy = list(y)
        for j, a in zip(free, z):
            yy[j] = a
        items.append((h_map(f, eta, yy, family), 1))
    return _average(items)


@dataclass
class ValidationReport:
    product_deviation: float
    boundedness_max: float
    symmetry_deviation: float
    bound: float
    tol: float

    @property
    def product_ok(self) -> bool:
        return self.product_deviation <= self.tol

    @property
    def bounded_ok(self) -> bool:
        return self.boundedness_max <= self.bound + self.tol

    @property
    def symmetry_ok(self) -> bool:
        return self.symmetry_deviation <= self.tol

    @property
    def passed(self) -> bool:
        return self.product_ok and self.bounded_ok and self.symmetry_ok


def _l2(f) -> float:
    if isinstance(f, FreeElement):
        return f.l2_squared() ** 0.5
    if isinstance(f, TrigPoly):
        return float(np.linalg.norm(f.coeffs))
    return float(np.linalg.norm(f.values.ravel()) / np.sqrt(f.shape.order))


def _distribution_gap(a, b, p) -> float:
    if isinstance(a, LatticeFunction):
        if a.dim == 1:
            va, vb = np.sort(np.abs(a.scalar.ravel())), np.sort(np.abs(b.scalar.ravel()))
        else:
            from .norms import jacobi_singular_values

            va = np.sort(jacobi_singular_values(a.values.reshape(-1, a.dim, a.dim)).ravel())
            vb = np.sort(jacobi_singular_values(b.values.reshape(-1, b.dim, b.dim)).ravel())
        scale = max(float(va.max(initial=0.0)), float(vb.max(initial=0.0)), 1e-300)
        return float(np.max(np.abs(va - vb), initial=0.0) / scale)
    # no pointwise values: compare the moments tau(|x|^{2r}), which fix the law of |x|
    gaps = []
    for r in (1, 2, 3):
        ma, mb = lp_pow_any(a, 2 * r), lp_pow_any(b, 2 * r)
        gaps.append(abs(ma - mb) / max(ma, mb, 1e-300))
    return max(gaps)


def validate_multiplier_family(
    fam: MultiplierFamily,
    eta: EtaMap,
    m: int,
    p: float = 4,
    trials: int = 20,
    seed=0,
    bound: float = 1.0,
    tol: float = 1e-10,
) -> ValidationReport:
    """Empirical check of product structure, uniform boundedness and symmetry.

    (a) ``M_{eta(y)}`` vs ``M_{eta_S(y)} M_{eta_{[n] minus S}(y)}``, relative L_2 deviation;
    (b) ``max ||M_y^k f||_p / ||f||_p`` over ``|k| <= 4m``;
    (c) distance between the distributions of ``M_y^k f`` and ``M_y^{-k} f``.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    if fam.sampler is None:
        raise ValueError("the family has no sampler for test functions")
    rng = np.random.default_rng(seed)
    n = eta.n
    prod_dev = bnd = sym = 0.0
    for _ in range(trials):
        f = fam.sampler(rng)
        y = tuple(int(rng.integers(h)) for h in eta.source.moduli)
        S = [j for j in range(n) if rng.random() < 0.5]
        rest = [j for j in range(n) if j not in S]
        full = fam.apply(f, eta(y))
        split = fam.apply(fam.apply(f, eta.truncated(y, rest)), eta.truncated(y, S))
        prod_dev = max(prod_dev, _l2(full - split) / max(_l2(full), 1e-300))
        base = lp_pow_any(f, p) ** (1 / p)
        k = int(rng.integers(1, 4 * m + 1))
        plus = fam.power(f, eta(y), k)
        minus = fam.power(f, eta(y), -k)
        for g in (plus, minus):
            bnd = max(bnd, lp_pow_any(g, p) ** (1 / p) / base)
        sym = max(sym, _distribution_gap(plus, minus, p))
    return ValidationReport(prod_dev, bnd, sym, bound, tol)
