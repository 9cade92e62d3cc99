"""Evaluators for the balanced-truncation and metric X_p inequalities.

Every evaluator returns an :class:`InequalityReport` with the left-hand
side, the two right-hand terms and

    ratio = lhs / (m_factor * (rhs_derivative_term + rhs_full_term)),

where ``m_factor = m^p`` whenever a scaling parameter is present.  Inputs may
be dense :class:`LatticeFunction` objects, scalar :class:`TrigPoly` objects
(exact even-p norms on groups too large to store) or, for the free-product
evaluators, :class:`FreeElement` objects.

Shifts indexed by ``Z_2^n`` use the multiplicative picture: ``eps`` ranges
over ``{-1, +1}^n`` embedded coordinatewise in ``Z_{8m}``.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .freealg import FreeElement
from .lattice import GroupShape, LatticeFunction
from .norms import is_even_integer, lp_pow
from .operators import (
    CLASSICAL,
    HYPERCUBE,
    SPECTRAL,
    EtaMap,
    MultiplierFamily,
    cond_expect,
    default_family,
    derivative,
    h_expect,
    h_map,
    lp_pow_any,
    t_s_average,
    translate,
    validate_multiplier_family,
)
from .sparse import ShiftMomentForm, TrigPoly, point_tables, shift_table

EXACT_SUBSET_LIMIT = 10**4
MEAN_ZERO_TOL = 1e-12
DENOM_TOL = 1e-14

UNIT_SHIFT = "unit-shift"
TORUS_VARIANTS = ("uniform-eta", "sign-eta", "classical-derivative")


class InputError(ValueError):
    """Raised when an input violates an evaluator's precondition."""


@dataclass
class InequalityReport:
    lhs: float
    rhs_derivative_term: float
    rhs_full_term: float
    m_factor: float
    ratio: float | None
    subset_mode: str
    params: dict
    meets_threshold: bool | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def components(self) -> tuple[float, float, float]:
        return (self.lhs, self.rhs_derivative_term, self.rhs_full_term)

    def to_dict(self) -> dict:
        return asdict(self)


def _report(lhs, deriv, full, m_factor, subset_mode, params, notes=()) -> InequalityReport:
    lhs, deriv, full = (max(float(v), 0.0) for v in (lhs, deriv, full))
    denom = m_factor * (deriv + full)
    ratio = lhs / denom if denom >= DENOM_TOL else None
    n, k, m = params.get("n"), params.get("k"), params.get("m")
    meets = None if m is None else bool(m * m * k >= n)
    return InequalityReport(lhs, deriv, full, float(m_factor), ratio, subset_mode, params, meets, list(notes))


# ----------------------------------------------------------------- subsets


def _unrank(rank: int, n: int, k: int) -> tuple[int, ...]:
    out = []
    start = 0
    for left in range(k, 0, -1):
        for c in range(start, n):
            block = math.comb(n - c - 1, left - 1)
            if rank < block:
                out.append(c)
                start = c + 1
                break
            rank -= block
    return tuple(out)


def subsets(n: int, k: int, mode: str = "auto", count: int | None = None, seed=0):
    """The size-``k`` subsets to average over, and the mode label.

    ``auto`` enumerates when ``C(n, k) <= 10^4`` and otherwise samples ``10^4``
    distinct subsets.  Sampled subsets are returned in lexicographic order, so
    sampling all ``C(n, k)`` of them reproduces exact mode bit for bit.
    """
    if not 1 <= k <= n:
        raise InputError(f"need 1 <= k <= n, got k={k}, n={n}")
    total = math.comb(n, k)
    if mode == "auto":
        mode = "exact" if total <= EXACT_SUBSET_LIMIT else "sampled"
        count = EXACT_SUBSET_LIMIT if count is None else count
    if mode == "exact":
        return list(itertools.combinations(range(n), k)), "exact"
    if mode != "sampled":
        raise InputError(f"unknown subset mode {mode!r}")
    count = EXACT_SUBSET_LIMIT if count is None else int(count)
    if count < 1:
        raise InputError("sample count must be >= 1")
    count = min(count, total)
    rng = np.random.default_rng(seed)
    if total <= 10**7:
        ranks = rng.choice(total, size=count, replace=False)
        chosen = {_unrank(int(r), n, k) for r in ranks}
    else:
        chosen = set()
        while len(chosen) < count:
            chosen.add(tuple(sorted(int(v) for v in rng.choice(n, size=k, replace=False))))
    return sorted(chosen), f"sampled({count},{seed})"


def _pmap(fn: Callable, items: list, workers: int = 1) -> np.ndarray:
    # results come back in input order; the reduction is a numpy pairwise sum
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vals = list(pool.map(fn, items))
    else:
        vals = [fn(x) for x in items]
    return np.asarray(vals, dtype=float)


def _mean(vals) -> float:
    vals = np.asarray(vals, dtype=float)
    return float(np.sum(vals) / len(vals)) if len(vals) else 0.0


def _law_average(f, law: Counter, p, family: MultiplierFamily | None = None) -> float:
    """``sum_v c_v ||M_v f - f||_p^p / sum_v c_v`` over a law given as counts."""
    act = family.apply if family is not None else translate
    keys = sorted(law)
    weights = np.array([law[v] for v in keys], dtype=float)
    vals = np.array([lp_pow_any(act(f, v) - f, p) if any(v) else 0.0 for v in keys])
    return float(np.sum(vals * weights) / np.sum(weights))


def _product_law(values_per_coord: Sequence[Sequence[int]], moduli) -> Counter:
    law: Counter = Counter()
    for combo in itertools.product(*values_per_coord):
        law[tuple(int(v) % q for v, q in zip(combo, moduli))] += 1
    return law


def _check_mean_zero(f):
    if isinstance(f, TrigPoly):
        mu = abs(f.mean())
    elif isinstance(f, LatticeFunction):
        mu = float(np.max(np.abs(f.mean()), initial=0.0))
    else:
        raise TypeError(f"unsupported input {type(f).__name__}")
    if mu > MEAN_ZERO_TOL:
        raise InputError(f"input must be mean zero (|mean| = {mu:.3g} > {MEAN_ZERO_TOL})")


def _shape_dim(f) -> tuple[GroupShape, int]:
    if isinstance(f, (LatticeFunction, TrigPoly)):
        return f.shape, f.dim
    raise TypeError(f"unsupported input {type(f).__name__}")


# ------------------------------------------------- balanced truncations


def eval_rp1(h, p, k, derivative_mode: str | None = None, subset_mode="auto", count=None, seed=0, workers=1):
    """Balanced truncations of a mean-zero ``h``: average of ``||E_{[n] minus S} h||_p^p``."""
    shape, d = _shape_dim(h)
    _check_mean_zero(h)
    if derivative_mode is None:
        derivative_mode = HYPERCUBE if all(q == 2 for q in shape.moduli) else SPECTRAL
    n = shape.n
    subs, label = subsets(n, k, subset_mode, count, seed)
    lhs = _mean(_pmap(lambda S: lp_pow_any(cond_expect(h, S), p), subs, workers))
    dsum = float(np.sum([lp_pow_any(derivative(h, j, derivative_mode), p) for j in range(n)]))
    deriv = k / n * dsum
    full = (k / n) ** (p / 2) * lp_pow_any(h, p)
    params = dict(n=n, k=k, p=p, d=d, moduli=list(shape.moduli), derivative_mode=derivative_mode, evaluator="eval_rp1")
    return _report(lhs, deriv, full, 1.0, label, params)


def eval_np(f, p, k, subset_mode="auto", count=None, seed=0, workers=1):
    """Balanced Fourier-Walsh truncations on ``Z_2^n`` with hypercube differences."""
    shape, _ = _shape_dim(f)
    if any(q != 2 for q in shape.moduli):
        raise InputError(f"eval_np needs Z_2^n, got moduli {shape.moduli}")
    rep = eval_rp1(f, p, k, HYPERCUBE, subset_mode, count, seed, workers)
    rep.params["evaluator"] = "eval_np"
    return rep


# ----------------------------------------------------------- Theorem A


@dataclass(eq=False)
class RepresentablePair:
    """``(H, eta, {M_gamma}, derivatives)`` feeding the abstract inequality.

    ``derivative_mode``:

    * ``unit-shift``: the metric form ``(2 s)^{p-1} ||M_{e_j} f - f||_p^p``,
      ``s`` the largest spread of the centered eta values in one coordinate
      (``s = 2 ell`` for ``beta(ell)``, giving ``(4 ell)^{p-1}``);
    * ``spectral`` / ``hypercube-difference``: ``d_j`` acts on the ``y``
      variable of ``y -> M_{2 eta(y)} f``.
    """

    eta: EtaMap
    family: MultiplierFamily | None = None
    derivative_mode: str = UNIT_SHIFT
    validate: bool = True
    _checked: dict = field(default_factory=dict, repr=False)

    @property
    def source(self) -> GroupShape:
        return self.eta.source

    def check(self, family: MultiplierFamily, m: int, p) -> None:
        key = (id(family), m, p)
        if not self.validate or key in self._checked:
            return
        q = p if is_even_integer(p) else 2
        rep = validate_multiplier_family(family, self.eta, m, q, trials=3, seed=0)
        self._checked[key] = rep
        if not rep.passed:
            raise InputError(f"multiplier family fails the representability checks: {rep}")


def _derivative_terms_y(f, pair: RepresentablePair, family, p) -> list[float]:
    """``E_y ||d_j^y M_{2 eta(y)} f||_p^p`` for every coordinate ``j``."""
    eta, H = pair.eta, pair.eta.source
    cache: dict = {}

    def g(y):
        v = eta.target.scale(2, eta(y))
        if v not in cache:
            cache[v] = family.apply(f, v)
        return cache[v]

    total = []
    for j in range(eta.n):
        if pair.derivative_mode == HYPERCUBE and H.moduli[j] != 2:
            raise InputError(f"hypercube differences need H_j = Z_2 (coordinate {j})")
        acc = []
        others = [range(h) if i != j else range(1) for i, h in enumerate(H.moduli)]
        for base in itertools.product(*others):
            line = []
            for t in range(H.moduli[j]):
                y = list(base)
                y[j] = t
                line.append(g(y))
            if pair.derivative_mode == SPECTRAL:
                mean = line[0]
                for el in line[1:]:
                    mean = mean + el
                mean = mean * (1.0 / len(line))
                acc.extend(lp_pow_any(el - mean, p) for el in line)
            else:
                acc.extend(lp_pow_any(line[t] - line[1 - t], p) for t in range(2))
        total.append(_mean(acc))
    return total


def eval_theorem_a(f, pair: RepresentablePair, p, k, m, subset_mode="auto", count=None, seed=0, workers=1):
    """The abstract inequality: ``E_S E_y ||M_{4m eta_S(y)} f - f||_p^p`` against its right side.

    ``m >= sqrt(n/k)`` is reported, never enforced.
    """
    if m < 1:
        raise InputError("m must be >= 1")
    eta = pair.eta
    family = pair.family or default_family(f, m)
    pair.check(family, m, p)
    n = eta.n
    subs, label = subsets(n, k, subset_mode, count, seed)
    lhs = _mean(_pmap(lambda S: _law_average(f, eta.shifts(S, 4 * m), p, family), subs, workers))
    full_law = eta.shifts(range(n), 1)
    full = (k / n) ** (p / 2) * _law_average(f, full_law, p, family)
    if pair.derivative_mode == UNIT_SHIFT:
        const = (2 * eta.span()) ** (p - 1)
        units = [_law_average(f, Counter({eta.target.unit(j): 1}), p, family) for j in range(n)]
        deriv = k / n * const * float(np.sum(units))
    elif pair.derivative_mode in (SPECTRAL, HYPERCUBE):
        deriv = k / n * float(np.sum(_derivative_terms_y(f, pair, family, p)))
    else:
        raise InputError(f"unknown derivative mode {pair.derivative_mode!r}")
    dim = f.dim if hasattr(f, "dim") else None
    params = dict(
        n=n, k=k, m=m, p=p, d=dim, eta=eta.kind, family=family.descriptor,
        derivative_mode=pair.derivative_mode, evaluator="eval_theorem_a",
    )
    if "ell" in eta.params:
        params["ell"] = eta.params["ell"]
    return _report(lhs, deriv, full, float(m) ** p, label, params)


# ------------------------------------------------------- cyclic groups


def _cyclic_tables(shape, m, ell):
    betas = [y - ell if y < ell else y - (ell - 1) for y in range(2 * ell)]
    long_ = [shift_table(shape, j, [4 * m * b for b in betas]) for j in range(shape.n)]
    short = [shift_table(shape, j, betas) for j in range(shape.n)]
    return long_, short


def _cyclic_sparse(f: TrigPoly, p, k, m, ell):
    form = ShiftMomentForm(f.shape, f.freqs, p)
    long_, short = _cyclic_tables(f.shape, m, ell)
    lhs = form.evaluate(form.kernel_balanced(long_, k), f.coeffs)
    units = [form.evaluate(form.kernel(point_tables(f.shape, f.shape.unit(j))), f.coeffs) for j in range(f.shape.n)]
    full = form.evaluate(form.kernel(short), f.coeffs)
    return lhs, float(np.sum(units)), full


def _check_moduli(f, N: int, name: str):
    if any(q != N for q in f.shape.moduli):
        raise InputError(f"{name} needs moduli all equal to {N}, got {f.shape.moduli}")


def eval_cyclic(f, p, k, m, ell=1, subset_mode="auto", count=None, seed=0, workers=1):
    """Cyclic inequality on ``Z_{8 ell m}^n`` with ``eta = beta_ell``.

    The derivative term is ``(4 ell)^{p-1} (k/n) sum_j ||f(. + e_j) - f||_p^p``.
    Scalar :class:`TrigPoly` inputs with even ``p`` are evaluated through
    exact moment kernels (all ``C(n, k)`` subsets at once).
    """
    if ell < 1 or m < 1:
        raise InputError("ell and m must be >= 1")
    N = 8 * ell * m
    _check_moduli(f, N, "eval_cyclic")
    n = f.shape.n
    betas = [y - ell if y < ell else y - (ell - 1) for y in range(2 * ell)]
    sparse_fast = isinstance(f, TrigPoly) and is_even_integer(p) and subset_mode in ("auto", "exact")
    if sparse_fast:
        if not 1 <= k <= n:
            raise InputError(f"need 1 <= k <= n, got k={k}, n={n}")
        lhs, usum, full_avg = _cyclic_sparse(f, p, k, m, ell)
        label = "exact"
    else:
        subs, label = subsets(n, k, subset_mode, count, seed)

        def per_subset(S):
            cols = [[4 * m * b for b in betas] if j in S else [0] for j in range(n)]
            return _law_average(f, _product_law(cols, f.shape.moduli), p)

        lhs = _mean(_pmap(per_subset, subs, workers))
        usum = float(np.sum([lp_pow_any(translate(f, f.shape.unit(j)) - f, p) for j in range(n)]))
        full_avg = _law_average(f, _product_law([betas] * n, f.shape.moduli), p)
    deriv = (4 * ell) ** (p - 1) * k / n * usum
    full = (k / n) ** (p / 2) * full_avg
    params = dict(n=n, k=k, m=m, ell=ell, p=p, d=f.dim, evaluator="eval_cyclic")
    return _report(lhs, deriv, full, float(m) ** p, label, params)


def eval_nc(f, p, k, m, subset_mode="auto", count=None, seed=0, workers=1):
    """Schatten-valued metric inequality on ``Z_{8m}^n``.

    The source display carries ``m^{-p}`` on the left; the report keeps the
    common convention ``ratio = lhs / (m^p (...))``, which is the same number.
    The derivative term carries ``4^{p-1}`` as in the cyclic case.
    """
    N = 8 * m
    _check_moduli(f, N, "eval_nc")
    n = f.shape.n
    subs, label = subsets(n, k, subset_mode, count, seed)

    def per_subset(S):
        # 4m eps_S is 4m e_S for every sign pattern since 4m = -4m mod 8m
        total = 0.0
        for signs in itertools.product((-1, 1), repeat=len(S)):
            v = [0] * n
            for j, s in zip(S, signs):
                v[j] = 4 * m * s
            total += lp_pow_any(translate(f, v) - f, p)
        return total / 2 ** len(S)

    lhs = _mean(_pmap(per_subset, subs, workers))
    usum = float(np.sum([lp_pow_any(translate(f, f.shape.unit(j)) - f, p) for j in range(n)]))
    eps_vals = [lp_pow_any(translate(f, eps) - f, p) for eps in itertools.product((-1, 1), repeat=n)]
    full = (k / n) ** (p / 2) * _mean(eps_vals)
    deriv = 4 ** (p - 1) * k / n * usum
    params = dict(n=n, k=k, m=m, ell=1, p=p, d=f.dim, evaluator="eval_nc")
    notes = ["m^{-p} moved from the left side into m_factor"]
    return _report(lhs, deriv, full, float(m) ** p, label, params, notes)


# --------------------------------------------------------------- torus


def torus_trigpoly(n: int, m: int, ell: int, terms) -> TrigPoly:
    """Trigonometric polynomial with integer torus frequencies on the grid ``Z_{8 ell m}^n``.

    ``terms`` is an iterable of ``(frequency vector, coefficient)``; every
    frequency must satisfy ``|w_j| < 4 ell m`` so that it is resolved by the grid.
    """
    N = 8 * ell * m
    terms = list(terms)
    for w, _ in terms:
        if any(abs(int(x)) >= N // 2 for x in w):
            raise InputError(f"frequency {tuple(w)} is not resolved on Z_{N}")
    return TrigPoly.from_terms(GroupShape.cyclic(N, n), terms)


def eval_torus(f, p, k, m, variant: str = "uniform-eta", ell: int = 1, subset_mode="auto", count=None, seed=0, workers=1):
    """Torus inequalities, evaluated exactly on the grid ``Z_{8 ell m}^n``.

    ``uniform-eta``: ``y_j`` runs over ``beta_ell(s) / 2 ell``, so the long shift
    ``y_S`` is ``4m beta_ell(s)_S`` grid steps and ``y / 4m`` is ``beta_ell(s)``.
    ``sign-eta``: long shift ``e_S / 2``, short shifts ``e_j / 8m`` and ``eps / 8m``.
    ``classical-derivative``: the unit-shift term becomes ``(2m)^{-p} ||d_j f||_p^p``
    with the usual torus derivative.
    """
    if variant not in TORUS_VARIANTS:
        raise InputError(f"unknown torus variant {variant!r}")
    N = 8 * ell * m
    if any(q != N for q in f.shape.moduli):
        raise InputError(f"resolution ell={ell} with m={m} needs moduli {N}, got {f.shape.moduli}")
    n = f.shape.n
    moduli = f.shape.moduli
    betas = [y - ell if y < ell else y - (ell - 1) for y in range(2 * ell)]
    subs, label = subsets(n, k, subset_mode, count, seed)
    if variant == "sign-eta":
        def per_subset(S):
            v = [N // 2 if j in S else 0 for j in range(n)]
            return lp_pow_any(translate(f, v) - f, p)

        dvals = [lp_pow_any(translate(f, [ell if i == j else 0 for i in range(n)]) - f, p) for j in range(n)]
        full_avg = _law_average(f, _product_law([[-ell, ell]] * n, moduli), p)
    else:
        def per_subset(S):
            cols = [[4 * m * b for b in betas] if j in S else [0] for j in range(n)]
            return _law_average(f, _product_law(cols, moduli), p)

        if variant == "uniform-eta":
            dvals = [
                _law_average(f, _product_law([betas if i == j else [0] for i in range(n)], moduli), p)
                for j in range(n)
            ]
        else:
            dvals = [(N / (2 * m)) ** p * lp_pow_any(derivative(f, j, CLASSICAL), p) for j in range(n)]
        full_avg = _law_average(f, _product_law([betas] * n, moduli), p)
    lhs = _mean(_pmap(per_subset, subs, workers))
    deriv = k / n * float(np.sum(dvals))
    full = (k / n) ** (p / 2) * full_avg
    params = dict(n=n, k=k, m=m, ell=ell, p=p, d=f.dim, variant=variant, evaluator="eval_torus")
    return _report(lhs, deriv, full, float(m) ** p, label, params)


# --------------------------------------------------------- free products


def eval_free_transfer(f: FreeElement, p, k, m, subset_mode="auto", count=None, seed=0, workers=1):
    """Transferred inequality in the group algebra of ``Z_{8m}^{*n}`` (or ``F_n``).

    Multipliers ``M_u`` are the character multipliers on the grid ``Z_{8m}^n``;
    norms are exact trace moments, so ``p`` must be an even integer.
    """
    if not isinstance(f, FreeElement):
        raise TypeError("eval_free_transfer takes a FreeElement")
    if not is_even_integer(p):
        raise InputError(f"exact free norms need an even integer p, got {p}")
    if f.modulus is not None and f.modulus != 8 * m:
        raise InputError(f"element lives over modulus {f.modulus}, expected {8 * m}")
    fam = MultiplierFamily.free_characters(f.n, m) if f.modulus else MultiplierFamily.free_group(f.n, m)
    n = f.n
    subs, label = subsets(n, k, subset_mode, count, seed)
    zero = [0] * n

    def shifted(v):
        return lp_pow_any(fam.apply(f, v) - f, p)

    def per_subset(S):
        v = list(zero)
        for j in S:
            v[j] = 4 * m
        return shifted(v)

    lhs = _mean(_pmap(per_subset, subs, workers))
    usum = float(np.sum([shifted([1 if i == j else 0 for i in range(n)]) for j in range(n)]))
    full_avg = _mean([shifted(list(eps)) for eps in itertools.product((-1, 1), repeat=n)])
    deriv = 4 ** (p - 1) * k / n * usum
    full = (k / n) ** (p / 2) * full_avg
    params = dict(
        n=n, k=k, m=m, ell=1, p=p, d=None, evaluator="eval_free_transfer",
        group="free-group" if f.modulus is None else f"Z_{8 * m}^*{n}",
    )
    return _report(lhs, deriv, full, float(m) ** p, label, params)


# ------------------------------------------------ intermediate identities


def fs_identity_gap(f, eta: EtaMap, S: Iterable[int], y: Sequence[int], p=2, family=None) -> float:
    """``||F_S(y) - E_{[n] minus S} h(y)||_p`` with ``F_S(y) = M_{2 eta_S(y)} T f - M_{-2 eta_S(y)} T f``,
    ``T = T_{[n] minus S}``."""
    family = family or default_family(f)
    S = sorted(S)
    rest = [j for j in range(eta.n) if j not in S]
    T = t_s_average(f, rest, eta, family)
    v = eta.target.scale(2, eta.truncated(y, S))
    F = family.apply(T, v) - family.apply(T, eta.target.neg(v))
    return lp_pow_any(F - h_expect(f, eta, S, y, family), p) ** (1.0 / p)


def h_integral(f, eta: EtaMap, family=None):
    """``E_y h(y)`` for ``h(y) = M_{2 eta(y)} f - M_{-2 eta(y)} f``."""
    family = family or default_family(f)
    acc = None
    count = 0
    for y in eta.points():
        term = h_map(f, eta, y, family)
        acc = term if acc is None else acc + term
        count += 1
    return acc * (1.0 / count)


def lema8_terms(f, eta: EtaMap, S: Iterable[int], p, family=None) -> tuple[float, float]:
    """``(||T_S f - f||_p^p, E_y ||M_{eta(y)} f - f||_p^p)``."""
    family = family or default_family(f)
    lhs = lp_pow_any(t_s_average(f, S, eta, family) - f, p)
    rhs = _law_average(f, eta.shifts(range(eta.n), 1), p, family)
    return lhs, rhs


def derivative_vs_unit_shift(f, pair: RepresentablePair, p, m: int = 1) -> list[tuple[float, float]]:
    """Per coordinate: ``(E_y ||d_j^y M_{2 eta(y)} f||_p^p, ||M_{e_j} f - f||_p^p)``.

    Empirical probe of when the derivative term is dominated by unit shifts.
    """
    family = pair.family or default_family(f, m)
    terms = _derivative_terms_y(f, pair, family, p)
    units = [_law_average(f, Counter({pair.eta.target.unit(j): 1}), p, family) for j in range(pair.eta.n)]
    return list(zip(terms, units))
