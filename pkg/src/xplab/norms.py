"""Schatten norms and normalized L_p norms of lattice functions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import POSITION, LatticeFunction, SideError

JACOBI_TOL = 1e-12
_MAX_SWEEPS = 60


@dataclass(frozen=True)
class NormSpec:
    p: float
    dim: int = 1

    def __post_init__(self):
        if not (self.p >= 2):
            raise ValueError(f"p must be >= 2, got {self.p}")
        if self.dim < 1:
            raise ValueError("fiber dimension must be >= 1")

    @property
    def even(self) -> bool:
        return is_even_integer(self.p)


def is_even_integer(p) -> bool:
    return p != math.inf and float(p).is_integer() and int(p) % 2 == 0


def jacobi_singular_values(A, tol: float = JACOBI_TOL) -> np.ndarray:
    """Singular values of a batch ``(..., d, d)`` of matrices.

    One-sided cyclic Jacobi: column pairs of ``A`` are rotated until every
    off-diagonal entry of ``A* A`` is below ``tol * ||A||_F^2``; the singular
    values are then the column norms.  Returned unsorted along the last axis.
    """
    A = np.array(A, dtype=complex)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    batch = A.shape[:-2]
    d = A.shape[-1]
    U = A.reshape((-1,) + A.shape[-2:]).copy()
    frob2 = np.einsum("bij,bij->b", U, U.conj()).real
    thresh = tol * np.maximum(frob2, np.finfo(float).tiny)
    for _ in range(_MAX_SWEEPS):
        worst = 0.0
        for p in range(d - 1):
            for q in range(p + 1, d):
                ap = U[:, :, p].copy()
                aq = U[:, :, q].copy()
                alpha = np.einsum("bi,bi->b", ap.conj(), ap).real
                beta = np.einsum("bi,bi->b", aq.conj(), aq).real
                gamma = np.einsum("bi,bi->b", ap.conj(), aq)
                mag = np.abs(gamma)
                worst = max(worst, float(np.max(mag / thresh)))
                act = mag > thresh
                if not np.any(act):
                    continue
                phase = np.where(act, gamma / np.where(act, mag, 1.0), 1.0)
                zeta = np.where(act, (beta - alpha) / (2.0 * np.where(act, mag, 1.0)), 0.0)
                sgn = np.where(zeta >= 0, 1.0, -1.0)
                t = np.where(act, sgn / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta)), 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                bq = aq / phase[:, None]
                U[:, :, p] = c[:, None] * ap - s[:, None] * bq
                U[:, :, q] = (s[:, None] * ap + c[:, None] * bq) * phase[:, None]
        if worst <= 1.0:
            break
    sv = np.sqrt(np.einsum("bij,bij->bj", U, U.conj()).real)
    return sv.reshape(batch + (d,))


def schatten_pow(A, p) -> np.ndarray:
    """``||A||_{S_p}^p`` for a batch of matrices (``p`` finite)."""
    A = np.asarray(A, dtype=complex)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    d = A.shape[-1]
    if d == 1:
        return np.abs(A[..., 0, 0]) ** p
    if is_even_integer(p):
        # trace moments tr((A*A)^{p/2})
        H = np.swapaxes(A.conj(), -1, -2) @ A
        r = int(p) // 2
        P = H
        for _ in range(r - 1):
            P = P @ H
        return np.trace(P, axis1=-2, axis2=-1).real
    return np.sum(jacobi_singular_values(A) ** p, axis=-1)


def schatten_norm(A, p) -> float:
    """Schatten p-norm of one matrix; ``p = inf`` gives the operator norm."""
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    if p == math.inf:
        return float(np.max(jacobi_singular_values(A)))
    if p < 1:
        raise ValueError("p must be >= 1")
    if is_even_integer(p):
        return float(schatten_pow(A, p)) ** (1.0 / p)
    return float(np.sum(jacobi_singular_values(A) ** p) ** (1.0 / p))


def _values(f) -> np.ndarray:
    if f.side != POSITION:
        raise SideError("L_p norms are taken on the position side")
    return f.values.reshape((-1,) + f.values.shape[-2:])


def lp_pow(f: LatticeFunction, p) -> float:
    """``||f||_p^p = 1/|G| sum_x ||f(x)||_{S_p}^p``."""
    return float(np.mean(schatten_pow(_values(f), p)))


def lp_norm(f: LatticeFunction, spec) -> float:
    """Normalized L_p norm; ``spec`` is a :class:`NormSpec` or a number ``p``."""
    p = spec.p if isinstance(spec, NormSpec) else spec
    if p == math.inf:
        v = _values(f)
        if v.shape[-1] == 1:
            return float(np.max(np.abs(v)))
        return float(np.max(jacobi_singular_values(v)))
    return lp_pow(f, p) ** (1.0 / p)
