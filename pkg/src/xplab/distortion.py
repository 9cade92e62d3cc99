"""Grid metrics, the circle embedding ``h``, distortion of candidate maps and closed-form bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

EXACT_POINT_LIMIT = 2 * 10**4
DEFAULT_PAIR_SAMPLES = 10**5


@dataclass(frozen=True)
class GridSpec:
    """``[m]_q^n``: the points ``{1, ..., m}^n`` with the ``l_q`` distance."""

    m: int
    n: int
    q: float

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be >= 1")
        if not self.q >= 2:
            raise ValueError(f"q must be >= 2, got {self.q}")

    def points(self) -> np.ndarray:
        grids = np.indices((self.m,) * self.n).reshape(self.n, -1).T
        return grids + 1

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return x.shape == (self.n,) and bool(np.all((x >= 1) & (x <= self.m)))


def _lq(diff: np.ndarray, q: float) -> np.ndarray:
    a = np.abs(diff)
    if q == math.inf:
        return a.max(axis=-1)
    return (a**q).sum(axis=-1) ** (1.0 / q)


def grid_dist(x, y, spec: GridSpec) -> float:
    """``(sum_j |x_j - y_j|^q)^{1/q}`` for grid points ``x, y``."""
    for pt in (x, y):
        if not spec.contains(pt):
            raise ValueError(f"point {tuple(np.asarray(pt).tolist())} is outside [{spec.m}]^{spec.n}")
    return float(_lq(np.asarray(x, float) - np.asarray(y, float), spec.q))


def circle_embed_h(x, m: int) -> np.ndarray:
    """``Z_m^n -> {0, ..., 4m}^{2n}``: coordinate ``j`` goes to ``round(2m(1 + cos t), 2m(1 + sin t))``, ``t = 2 pi x_j / m``.

    Rounding is half-up so the map is deterministic across platforms.
    """
    x = np.asarray(x, dtype=np.int64) % m
    theta = 2 * np.pi * x / m
    pair = np.stack([2 * m * (1 + np.cos(theta)), 2 * m * (1 + np.sin(theta))], axis=-1)
    return np.floor(pair + 0.5).astype(np.int64).reshape(x.shape[:-1] + (2 * x.shape[-1],))


def circle_distance(x, y, m: int, q: float) -> np.ndarray:
    """``(sum_j |e^{2 pi i x_j/m} - e^{2 pi i y_j/m}|^q)^{1/q}``, broadcasting over leading axes."""
    ex = np.exp(2j * np.pi * (np.asarray(x) % m) / m)
    ey = np.exp(2j * np.pi * (np.asarray(y) % m) / m)
    return _lq(ex - ey, q)


@dataclass(frozen=True)
class Comparability:
    m: int
    n: int
    q: float
    c1: float
    c2: float
    pairs: int

    @property
    def spread(self) -> float:
        return self.c2 / self.c1 if self.c1 > 0 else math.inf


def comparability(m: int, n: int, q: float) -> Comparability:
    """Extreme values of ``||h(x) - h(y)||_q / (m * circle_distance(x, y))`` over all pairs ``x != y`` of ``Z_m^n``."""
    pts = np.indices((m,) * n).reshape(n, -1).T
    img = circle_embed_h(pts, m).astype(float)
    i, j = np.triu_indices(len(pts), k=1)
    num = _lq(img[i] - img[j], q)
    den = m * circle_distance(pts[i], pts[j], m, q)
    r = num / den
    return Comparability(m, n, q, float(r.min()), float(r.max()), len(i))


@dataclass(frozen=True)
class EmbeddingCandidate:
    """A finite map ``X -> R^D``; ``points[i]`` goes to ``image[i]``, target norm ``l_p``."""

    points: np.ndarray = field(repr=False)
    image: np.ndarray = field(repr=False)
    p: float
    provenance: str = "user-supplied"

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        img = np.asarray(self.image, dtype=float)
        img = img.reshape(len(img), -1)
        if len(pts) != len(img):
            raise ValueError("points and image differ in length")
        if img.shape[1] < 1:
            raise ValueError("target dimension must be >= 1")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(img))):
            raise ValueError("embedding has non-finite values")
        if self.provenance not in ("user-supplied", "h-composition"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "image", img)

    @classmethod
    def from_map(cls, points, fn: Callable, p: float, provenance: str = "user-supplied") -> "EmbeddingCandidate":
        points = np.atleast_2d(np.asarray(points))
        return cls(points, np.array([np.asarray(fn(x), float).ravel() for x in points]), p, provenance)


def _pair_indices(npts: int, sample, seed_default=0):
    if sample == "exact" or (sample == "auto" and npts <= EXACT_POINT_LIMIT):
        return np.triu_indices(npts, k=1)
    if sample == "auto":
        count, seed = DEFAULT_PAIR_SAMPLES, seed_default
    else:
        kind, count, seed = sample
        if kind != "pairs":
            raise ValueError(f"unknown sample mode {sample!r}")
    rng = np.random.default_rng(seed)
    i = rng.integers(npts, size=count)
    j = rng.integers(npts, size=count)
    keep = i != j
    return i[keep], j[keep]


def measure_distortion(
    emb: EmbeddingCandidate,
    spec: GridSpec | None = None,
    sample="auto",
    q: float | None = None,
    domain_metric: Callable | None = None,
    chunk: int = 10**6,
) -> float | None:
    """``(max expansion) * (max contraction)`` of ``emb`` over distinct pairs.

    The domain distance is ``l_q`` (``q`` from ``spec`` when given) unless
    ``domain_metric(X, Y)`` is supplied for row-aligned point arrays.  Pairs at
    domain distance zero are skipped.  Returns ``None`` for a constant map and
    ``inf`` for a non-injective one.
    """
    if spec is not None:
        q = spec.q
        if not all(spec.contains(x) for x in emb.points.astype(np.int64)):
            raise ValueError("embedding points fall outside the grid")
    if q is None and domain_metric is None:
        raise ValueError("need a grid spec, an exponent q or a domain metric")
    if np.all(emb.image == emb.image[0]):
        return None
    I, J = _pair_indices(len(emb.points), sample)
    expand = 0.0
    contract = 0.0
    for s in range(0, len(I), chunk):
        i, j = I[s : s + chunk], J[s : s + chunk]
        if domain_metric is not None:
            dd = np.asarray(domain_metric(emb.points[i], emb.points[j]), float)
        else:
            dd = _lq(emb.points[i] - emb.points[j], q)
        dt = _lq(emb.image[i] - emb.image[j], emb.p)
        ok = dd > 0
        dd, dt = dd[ok], dt[ok]
        if len(dd) == 0:
            continue
        if np.any(dt == 0):
            return math.inf
        expand = max(expand, float(np.max(dt / dd)))
        contract = max(contract, float(np.max(dd / dt)))
    if expand == 0.0:
        return None
    return expand * contract


def compose_with_h(g: Callable, m: int, n: int, p: float) -> EmbeddingCandidate:
    """``F = g o h`` on ``Z_m^n``; measure it with ``domain_metric=circle_metric(m, q)``."""
    pts = np.indices((m,) * n).reshape(n, -1).T
    img = circle_embed_h(pts, m)
    return EmbeddingCandidate(pts, np.array([np.asarray(g(v), float).ravel() for v in img]), p, "h-composition")


def circle_metric(m: int, q: float) -> Callable:
    """``m`` times the circle distance, as a domain metric for :func:`measure_distortion`."""
    return lambda X, Y: m * circle_distance(X, Y, m, q)


@dataclass(frozen=True)
class DistortionBound:
    value: float
    first: float
    second: float
    exponent: float
    k: int
    m_choice: int
    threshold_ok: bool


def _check_order(p: float, q: float):
    if not (2 < q < p):
        raise ValueError(f"need 2 < q < p, got q={q}, p={p}")


def distortion_bound(n: int, m: int, p: float, q: float) -> DistortionBound:
    """``min{n^{(p-q)(q-2)/(q^2(p-2))}, m^{1-2/q}}`` plus the ceilinged parameter choices.

    ``k = ceil(n^{p(q-2)/(q(p-2))})`` and ``m* = ceil(n^{(p-q)/(q(p-2))})``;
    since the two exponents satisfy ``a + 2b = 1``, ``m*^2 k >= n`` holds and is
    checked in exact integer arithmetic.
    """
    _check_order(p, q)
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    expo = (p - q) * (q - 2) / (q * q * (p - 2))
    first = float(n) ** expo
    second = float(m) ** (1 - 2 / q)
    k = math.ceil(float(n) ** (p * (q - 2) / (q * (p - 2))))
    mc = math.ceil(float(n) ** ((p - q) / (q * (p - 2))))
    return DistortionBound(min(first, second), first, second, expo, k, mc, mc * mc * k >= n)


def snowflake_bound(p: float, q: float) -> float:
    """Largest admissible snowflake exponent ``q/p``."""
    _check_order(p, q)
    return q / p
