import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xplab.lattice import GroupShape, LatticeFunction, character, random_function
from xplab.norms import NormSpec, jacobi_singular_values, lp_norm, lp_pow, schatten_norm


def _rand(d, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


def _unitary(d, seed):
    q, r = np.linalg.qr(_rand(d, seed))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_schatten_examples():
    for d in (1, 3, 5):
        for p in (1, 2, 3.5, 4):
            assert schatten_norm(np.eye(d), p) == pytest.approx(d ** (1 / p))
    assert schatten_norm(np.diag([3.0, 4.0]), 2) == pytest.approx(5.0)
    A = _rand(4, 0)
    H = A.conj().T @ A
    assert schatten_norm(A, 4) == pytest.approx(np.trace(H @ H).real ** 0.25, rel=1e-10)
    assert schatten_norm(A, math.inf) == pytest.approx(np.linalg.norm(A, 2), rel=1e-10)
    with pytest.raises(ValueError):
        schatten_norm(np.array([[np.nan]]), 2)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 8), st.integers(0, 10**6))
def test_jacobi_matches_svd(d, seed):
    A = _rand(d, seed)
    got = np.sort(jacobi_singular_values(A))
    want = np.sort(np.linalg.svd(A, compute_uv=False))
    assert np.max(np.abs(got - want)) <= 1e-10 * max(1.0, want.max())


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.integers(0, 10**6), st.sampled_from([1.0, 1.5, 2.0, 3.0, 4.0, 6.5]))
def test_unitary_invariance(d, seed, p):
    A = _rand(d, seed)
    U, V = _unitary(d, seed + 1), _unitary(d, seed + 2)
    assert schatten_norm(U @ A @ V, p) == pytest.approx(schatten_norm(A, p), rel=1e-9)


def test_p2_is_frobenius():
    for s in range(20):
        A = _rand(5, s)
        assert abs(schatten_norm(A, 2) - np.linalg.norm(A)) <= 1e-12 * np.linalg.norm(A)


def test_lp_norm_examples():
    shape = GroupShape((4,))
    const = LatticeFunction.from_array(shape, np.full(4, 3 - 4j))
    assert lp_norm(const, 3) == pytest.approx(5.0)
    assert lp_norm(character(GroupShape((5, 3)), (2, 1)), NormSpec(4.5)) == pytest.approx(1.0)
    delta = LatticeFunction.from_array(shape, [1, 0, 0, 0])
    for p in (2, 3, 7):
        assert lp_norm(delta, p) == pytest.approx(0.25 ** (1 / p))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 4))
def test_monotone_in_p(seed, d):
    # probability measure on positions: scalar norms grow with p; Schatten norms shrink
    ps = [2.0, 2.5, 3.0, 4.0, 6.0]
    f = random_function(GroupShape((3, 4)), 1, seed=seed)
    vals = [lp_norm(f, p) for p in ps]
    assert all(a <= b * (1 + 1e-10) for a, b in zip(vals, vals[1:]))
    A = _rand(d, seed)
    svals = [schatten_norm(A, p) for p in ps]
    assert all(a >= b * (1 - 1e-10) for a, b in zip(svals, svals[1:]))


def test_normspec_validation():
    assert NormSpec(4).even
    assert not NormSpec(3).even
    with pytest.raises(ValueError):
        NormSpec(1.5)


def test_lp_pow_mixed_norm_definition():
    f = random_function(GroupShape((2, 3)), 2, seed=4)
    want = np.mean([np.sum(np.linalg.svd(f.values[x], compute_uv=False) ** 3) for x in np.ndindex(2, 3)])
    assert lp_pow(f, 3) == pytest.approx(want, rel=1e-10)
