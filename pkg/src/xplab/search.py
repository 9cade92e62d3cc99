"""Empirical constant estimation: maximize evaluator ratios over input functions.

Random trials draw complex Gaussian Fourier coefficients on a fixed support
(a random number of them switched on).  Trial ``t`` uses the stream
``default_rng([seed, 0, t])`` and trials are evaluated in fixed blocks of
:data:`BLOCK`, so results do not depend on the worker count.  The optional
hill-climb then perturbs one coefficient at a time from the best trial.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import inequality as iq
from .lattice import FOURIER, GroupShape, LatticeFunction, idft
from .norms import is_even_integer
from .serialize import decode_function, encode_function
from .sparse import ShiftMomentForm, TrigPoly, point_tables, shift_table

BLOCK = 64
ROUNDTRIP_TOL = 1e-10
STRATEGIES = ("random", "random+hill-climb")
SEARCH_EVALUATORS = ("eval_cyclic", "eval_nc", "eval_np", "eval_rp1")


@dataclass
class SearchConfig:
    evaluator: str
    params: dict
    budget: int = 1000
    strategy: str = "random"
    scale: float = 0.5
    seed: int = 0
    workers: int = 1
    support: str = "axes+pairs"
    keep_trace: bool = False
    patience: int = 200
    batch: int = 50
    max_climb: int | None = None

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.evaluator not in SEARCH_EVALUATORS:
            raise ValueError(f"search supports {SEARCH_EVALUATORS}, got {self.evaluator!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class SearchResult:
    best_ratio: float
    witness: dict
    params: dict
    report: dict
    best_trial: int
    climb_steps: int
    roundtrip_error: float
    trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------- objectives


class _Objective:
    size: int

    def ratios(self, C: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def build(self, c: np.ndarray):
        raise NotImplementedError

    def public(self, f) -> iq.InequalityReport:
        raise NotImplementedError


def _safe_ratio(lhs, denom):
    out = np.full(len(lhs), -np.inf)
    ok = denom >= iq.DENOM_TOL
    out[ok] = lhs[ok] / denom[ok]
    return out


class _WalshObjective(_Objective):
    """Scalar functions on ``Z_2^n``, coefficients on all nonempty ``A``.

    Works in position space: conditional expectations average out axes and
    hypercube differences flip one axis.
    """

    def __init__(self, n: int, p, k: int, name: str):
        self.shape = GroupShape.cyclic(2, n)
        self.n, self.p, self.k, self.name = n, p, k, name
        pts = self.shape.points()
        self.freqs = pts[1:]
        self.H = (-1.0) ** (self.freqs @ pts.T % 2)  # (2^n - 1, 2^n)
        self.size = len(self.freqs)
        self.outside = [tuple(1 + j for j in range(n) if j not in S) for S in itertools.combinations(range(n), k)]

    def ratios(self, C):
        p, n, k = self.p, self.n, self.k
        V = (C @ self.H).reshape((len(C),) + (2,) * n)
        lhs = np.zeros(len(C))
        for axes in self.outside:
            E = V.mean(axis=axes) if axes else V
            lhs += np.mean(np.abs(E.reshape(len(C), -1)) ** p, axis=1)
        lhs /= len(self.outside)
        deriv = np.zeros(len(C))
        for j in range(n):
            D = V - np.flip(V, axis=1 + j)
            deriv += np.mean(np.abs(D.reshape(len(C), -1)) ** p, axis=1)
        full = np.mean(np.abs(V.reshape(len(C), -1)) ** p, axis=1)
        denom = k / n * deriv + (k / n) ** (p / 2) * full
        return _safe_ratio(lhs, denom)

    def build(self, c):
        F = np.zeros(self.shape.moduli + (1, 1), dtype=complex)
        F[tuple(self.freqs.T)] = c[:, None, None]
        return idft(LatticeFunction(self.shape, F, FOURIER))

    def public(self, f):
        if self.name == "eval_np":
            return iq.eval_np(f, self.p, self.k)
        return iq.eval_rp1(f, self.p, self.k)


class _BlockObjective(_Objective):
    """Matrix-valued mean-zero functions on ``Z_2^n``; evaluated through the public evaluator."""

    def __init__(self, n: int, p, k: int, d: int):
        self.shape = GroupShape.cyclic(2, n)
        self.n, self.p, self.k, self.d = n, p, k, d
        self.freqs = self.shape.points()[1:]
        self.size = len(self.freqs) * d * d

    def build(self, c):
        F = np.zeros(self.shape.moduli + (self.d, self.d), dtype=complex)
        F[tuple(self.freqs.T)] = c.reshape(len(self.freqs), self.d, self.d)
        return idft(LatticeFunction(self.shape, F, FOURIER))

    def ratios(self, C):
        out = []
        for c in C:
            r = self.public(self.build(c)).ratio
            out.append(-np.inf if r is None else r)
        return np.asarray(out)

    def public(self, f):
        return iq.eval_rp1(f, self.p, self.k)


def cyclic_support(n: int, N: int, kind: str = "axes+pairs") -> np.ndarray:
    """Frequency support for cyclic searches.

    ``axes``: ``+-e_j, +-2 e_j``; ``axes+pairs`` adds ``+-e_i +- e_j``.
    """
    rows = set()
    for j in range(n):
        for a in (1, -1, 2, -2):
            w = [0] * n
            w[j] = a % N
            rows.add(tuple(w))
    if kind == "axes+pairs":
        for i, j in itertools.combinations(range(n), 2):
            for a, b in itertools.product((1, -1), repeat=2):
                w = [0] * n
                w[i], w[j] = a % N, b % N
                rows.add(tuple(w))
    elif kind != "axes":
        raise ValueError(f"unknown support {kind!r}")
    return np.array(sorted(rows), dtype=np.int64)


class _CyclicObjective(_Objective):
    """Scalar trigonometric polynomials on ``Z_{8 ell m}^n`` through exact moment kernels."""

    def __init__(self, n, p, k, m, ell, support, name):
        if not is_even_integer(p):
            raise ValueError("cyclic searches need an even integer p")
        self.n, self.p, self.k, self.m, self.ell, self.name = n, p, k, m, ell, name
        N = 8 * ell * m
        self.shape = GroupShape.cyclic(N, n)
        self.freqs = cyclic_support(n, N, support)
        self.size = len(self.freqs)
        form = ShiftMomentForm(self.shape, self.freqs, p)
        betas = [y - ell if y < ell else y - (ell - 1) for y in range(2 * ell)]
        long_ = [shift_table(self.shape, j, [4 * m * b for b in betas]) for j in range(n)]
        short = [shift_table(self.shape, j, betas) for j in range(n)]
        self.form = form
        K_unit = sum(form.kernel(point_tables(self.shape, self.shape.unit(j))) for j in range(n))
        K_rhs = (4 * ell) ** (p - 1) * k / n * K_unit + (k / n) ** (p / 2) * form.kernel(short)
        self.op_lhs = form.operator(form.kernel_balanced(long_, k))
        self.op_rhs = form.operator(K_rhs)

    def ratios(self, C):
        lhs = self.form.evaluate(self.op_lhs, C)
        denom = self.m ** self.p * self.form.evaluate(self.op_rhs, C)
        return _safe_ratio(lhs, denom)

    def build(self, c):
        return TrigPoly(self.shape, self.freqs, c)

    def public(self, f):
        if self.name == "eval_nc":
            return iq.eval_nc(f, self.p, self.k, self.m)
        return iq.eval_cyclic(f, self.p, self.k, self.m, self.ell)


def _objective(cfg: SearchConfig) -> _Objective:
    P = cfg.params
    n, k, p = int(P["n"]), int(P["k"]), P.get("p", 4)
    if not 1 <= k <= n:
        raise iq.InputError(f"need 1 <= k <= n, got k={k}, n={n}")
    if cfg.evaluator in ("eval_cyclic", "eval_nc"):
        ell = 1 if cfg.evaluator == "eval_nc" else int(P.get("ell", 1))
        m = int(P["m"]) if P.get("m") is not None else math.ceil(math.sqrt(n / k))
        return _CyclicObjective(n, p, k, m, ell, cfg.support, cfg.evaluator)
    d = int(P.get("d", 1))
    if d == 1:
        return _WalshObjective(n, p, k, cfg.evaluator)
    if cfg.evaluator == "eval_np":
        raise iq.InputError("eval_np is scalar; use eval_rp1 for matrix fibers")
    return _BlockObjective(n, p, k, d)


# ------------------------------------------------------------------- search


def _trial_coeffs(seed: int, t: int, size: int) -> np.ndarray:
    rng = np.random.default_rng([seed, 0, t])
    c = (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2)
    active = int(rng.integers(1, size + 1))
    off = rng.permutation(size)[active:]
    c[off] = 0
    return c


def _block_ratios(obj: _Objective, seed: int, block: int, budget: int):
    start = block * BLOCK
    stop = min(start + BLOCK, budget)
    C = np.zeros((BLOCK, obj.size), dtype=complex)
    for i, t in enumerate(range(start, stop)):
        C[i] = _trial_coeffs(seed, t, obj.size)
    # full fixed-size blocks keep every row's arithmetic identical across budgets
    C[stop - start :] = C[0]
    try:
        r = obj.ratios(C)[: stop - start]
    except (ValueError, ArithmeticError):
        r = np.array([_guarded(obj, c) for c in C[: stop - start]])
    return start, r


def _guarded(obj, c) -> float:
    try:
        return float(obj.ratios(c[None, :])[0])
    except (ValueError, ArithmeticError):
        return -np.inf


def maximize_ratio(cfg: SearchConfig) -> SearchResult:
    """Maximize the configured ratio; the reported value is re-evaluated through the public evaluator."""
    obj = _objective(cfg)
    nblocks = -(-cfg.budget // BLOCK)
    if cfg.workers > 1 and nblocks > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            blocks = list(pool.map(lambda b: _block_ratios(obj, cfg.seed, b, cfg.budget), range(nblocks)))
    else:
        blocks = [_block_ratios(obj, cfg.seed, b, cfg.budget) for b in range(nblocks)]
    ratios = np.concatenate([r for _, r in sorted(blocks, key=lambda x: x[0])])
    best_t = int(np.argmax(ratios))  # first index among ties
    best_c = _trial_coeffs(cfg.seed, best_t, obj.size)
    best_r = float(_guarded(obj, best_c))
    trace = [["random", int(t), float(r)] for t, r in enumerate(ratios)] if cfg.keep_trace else []
    steps = 0
    if cfg.strategy == "random+hill-climb" and np.isfinite(best_r):
        best_c, best_r, steps, climb_trace = _hill_climb(obj, best_c, best_r, cfg)
        trace.extend(climb_trace)
    witness = obj.build(best_c)
    report = obj.public(witness)
    public_r = report.ratio
    err = abs(public_r - best_r) if (public_r is not None and np.isfinite(best_r)) else 0.0
    if err > ROUNDTRIP_TOL * max(1.0, abs(best_r)):
        raise RuntimeError(f"witness re-evaluation drifted by {err:.3g}")
    params = dict(cfg.params, evaluator=cfg.evaluator, budget=cfg.budget, strategy=cfg.strategy,
                  seed=cfg.seed, support=cfg.support, scale=cfg.scale)
    return SearchResult(
        best_ratio=public_r if public_r is not None else float("nan"),
        witness=encode_function(witness),
        params=params,
        report=report.to_dict(),
        best_trial=best_t,
        climb_steps=steps,
        roundtrip_error=err,
        trace=trace,
    )


def _hill_climb(obj: _Objective, c: np.ndarray, r: float, cfg: SearchConfig):
    rng = np.random.default_rng([cfg.seed, 1])
    scale = cfg.scale
    limit = cfg.max_climb if cfg.max_climb is not None else cfg.budget
    quiet = 0
    improved_in_batch = False
    trace = []
    steps = 0
    c = c.copy()
    while steps < limit and quiet < cfg.patience:
        i = int(rng.integers(obj.size))
        typical = float(np.sqrt(np.mean(np.abs(c) ** 2))) or 1.0
        step = scale * typical * (rng.standard_normal() + 1j * rng.standard_normal()) / np.sqrt(2)
        trial = c.copy()
        trial[i] += step
        rt = _guarded(obj, trial)
        steps += 1
        if rt > r:
            c, r = trial, rt
            quiet = 0
            improved_in_batch = True
            if cfg.keep_trace:
                trace.append(["climb", steps, float(r)])
        else:
            quiet += 1
        if steps % cfg.batch == 0:
            if not improved_in_batch:
                scale *= 0.5
            improved_in_batch = False
    return c, r, steps, trace


def evaluate_witness(evaluator: str, params: dict, witness: dict) -> iq.InequalityReport:
    """Re-run the public evaluator on a serialized witness."""
    f = decode_function(witness)
    p, k = params.get("p", 4), int(params["k"])
    if evaluator == "eval_np":
        return iq.eval_np(f, p, k)
    if evaluator == "eval_rp1":
        return iq.eval_rp1(f, p, k)
    n = int(params["n"])
    m = int(params["m"]) if params.get("m") is not None else math.ceil(math.sqrt(n / k))
    if evaluator == "eval_nc":
        return iq.eval_nc(f, p, k, m)
    if evaluator == "eval_cyclic":
        return iq.eval_cyclic(f, p, k, m, int(params.get("ell", 1)))
    raise ValueError(f"cannot re-evaluate witnesses for {evaluator!r}")


# ---------------------------------------------------------------- sharpness


def extremal_witness(n: int, m: int, ell: int = 1) -> TrigPoly:
    """``f(x) = sum_j exp(2 pi i x_j / (8 ell m))`` on ``Z_{8 ell m}^n``."""
    shape = GroupShape.cyclic(8 * ell * m, n)
    terms = [(tuple(1 if i == j else 0 for i in range(n)), 1.0) for j in range(n)]
    return TrigPoly.from_terms(shape, terms)


def sharpness_scan(
    evaluator: str = "eval_cyclic",
    n_list=(16,),
    k: int = 1,
    m_list=(1, 2, 4),
    witness: str = "extremal-exponential",
    ell: int = 1,
    p=4,
    budget: int = 200,
    seed: int = 0,
    workers: int = 1,
) -> list[dict]:
    """Ratio table over ``(n, m)`` for a fixed ``k``."""
    if evaluator not in ("eval_cyclic", "eval_nc"):
        raise ValueError("sharpness scans run on eval_cyclic or eval_nc")
    if evaluator == "eval_nc" and ell != 1:
        raise ValueError("eval_nc has ell = 1")
    rows = []
    for n in n_list:
        if not 1 <= k <= n:
            raise iq.InputError(f"need 1 <= k <= n, got k={k}, n={n}")
        for m in m_list:
            if witness == "extremal-exponential":
                f = extremal_witness(n, m, ell)
                rep = (iq.eval_nc(f, p, k, m) if evaluator == "eval_nc" else iq.eval_cyclic(f, p, k, m, ell))
                ratio = rep.ratio
            elif witness == "search":
                cfg = SearchConfig(evaluator, dict(n=n, k=k, m=m, ell=ell, p=p), budget=budget,
                                   seed=seed, workers=workers, support="axes")
                res = maximize_ratio(cfg)
                rep = iq.InequalityReport(**res.report)
                ratio = res.best_ratio
            else:
                raise ValueError(f"unknown witness {witness!r}")
            rows.append(dict(
                n=n, k=k, m=m, ell=ell, p=p, ratio=ratio, lhs=rep.lhs,
                rhs_derivative_term=rep.rhs_derivative_term, rhs_full_term=rep.rhs_full_term,
                meets_threshold=bool(m * m * k >= n),
            ))
    return rows
