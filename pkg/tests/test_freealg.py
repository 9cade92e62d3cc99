import numpy as np
import pytest

import oracles
from xplab.freealg import (
    FreeElement,
    ModulusError,
    ReducedWord,
    adjoint,
    algebra_mul,
    chi_theta,
    chi_u,
    from_lattice,
    freelp_norm_even,
    freelp_pow_even,
    multiplier_Mu,
    random_element,
    random_word,
    to_lattice,
    trace,
    word_mul,
)
from xplab.lattice import GroupShape, LatticeFunction, ResourceCapError, dft
from xplab.norms import lp_norm


def W(letters, mod=8):
    return ReducedWord.parse(letters, mod)


def as_dict(a):
    return dict(a.coeffs)


def test_word_mul_examples():
    w = W([(0, 3), (1, 2), (0, 7)])
    assert len(w * w.inverse()) == 0
    assert word_mul(W([(0, 1), (1, 1)]), W([(1, -1), (0, 1)])).letters == ((0, 2),)
    assert (W([(0, 5)]) * W([(0, 3)])).letters == ()
    with pytest.raises(ModulusError):
        W([(0, 1)], 8) * W([(0, 1)], 16)


def test_reduced_word_invariants():
    with pytest.raises(ValueError):
        ReducedWord(((0, 1), (0, 2)), 8)
    with pytest.raises(ValueError):
        ReducedWord(((0, 8),), 8)
    assert W([(0, -1)]).letters == ((0, 7),)
    assert ReducedWord.parse([(0, 2), (0, -2), (1, 1)], None).letters == ((1, 1),)


@pytest.mark.parametrize("mod", [8, 16, None])
def test_associativity_and_oracle(mod):
    rng = np.random.default_rng(0)
    for _ in range(10**4):
        a, b, c = (random_word(3, mod, 4, rng) for _ in range(3))
        assert (a * b) * c == a * (b * c)
        assert (a * b).letters == oracles.word_reduce(a.letters + b.letters, mod)


def test_algebra_examples():
    w = W([(0, 1), (1, 3)])
    a, b = FreeElement.lam(w, 2, 8), FreeElement.lam(w.inverse(), 2, 8)
    prod = algebra_mul(a, b)
    assert as_dict(prod) == {(): 1} and trace(prod) == 1
    x = random_element(3, 8, size=10, seed=1)
    assert abs(trace(adjoint(x) * x) - x.l2_squared()) < 1e-12


def test_algebra_matches_oracle():
    a = random_element(2, 8, size=8, seed=2)
    b = random_element(2, 8, size=8, seed=3)
    want = oracles.free_mul(as_dict(a), as_dict(b), 8)
    got = as_dict(a * b)
    for w in set(want) | set(got):
        assert abs(got.get(w, 0) - want.get(w, 0)) < 1e-12


def test_abelian_convolution_n1():
    a = random_element(1, 8, size=5, seed=4)
    b = random_element(1, 8, size=5, seed=5)
    # pointwise product on the dual equals convolution of coefficients
    lhs = to_lattice(a * b).values
    rhs = to_lattice(a).values * to_lattice(b).values
    assert np.max(np.abs(lhs - rhs)) < 1e-12
    conv = np.zeros(8, complex)
    for i in range(8):
        for j in range(8):
            conv[(i + j) % 8] += a.coeff(((0, i),) if i else ()) * b.coeff(((0, j),) if j else ())
    assert np.max(np.abs(dft(to_lattice(a * b)).values.reshape(-1) - conv)) < 1e-12


def test_involution_and_tracial():
    for s in range(20):
        a = random_element(3, 16, size=6, seed=s)
        b = random_element(3, 16, size=6, seed=100 + s)
        assert as_dict(adjoint(adjoint(a))) == pytest.approx(as_dict(a))
        assert abs(trace(a * b) - trace(b * a)) < 1e-12


def test_support_cap():
    a = FreeElement(2, None, random_element(2, None, size=30, seed=0).coeffs, cap=50)
    with pytest.raises(ResourceCapError):
        a * a


def test_chi_examples():
    rng = np.random.default_rng(7)
    for _ in range(100):
        w = random_word(3, 8, 5, rng)
        assert chi_u(w, (0, 0, 0)) == 1
    assert chi_u(W([(0, 1), (1, 3)]), (1, 1)) == pytest.approx(-1, abs=1e-15)
    for _ in range(1000):
        w = random_word(3, 16, 5, rng)
        u, v = rng.integers(0, 16, 3), rng.integers(0, 16, 3)
        assert abs(chi_u(w, u) * chi_u(w, v) - chi_u(w, (u + v) % 16)) < 1e-12
        assert abs(abs(chi_u(w, u)) - 1) < 1e-14


def test_multiplier_properties():
    rng = np.random.default_rng(8)
    a0 = random_element(2, 8, size=5, seed=9)
    assert as_dict(multiplier_Mu(a0, (0, 0))) == pytest.approx(as_dict(a0))
    worst = 0.0
    for _ in range(1000):
        w, v = random_word(2, 8, 4, rng), random_word(2, 8, 4, rng)
        u = rng.integers(0, 8, 2)
        lw, lv = FreeElement.lam(w, 2, 8), FreeElement.lam(v, 2, 8)
        lhs = as_dict(multiplier_Mu(lw * lv, u))
        rhs = as_dict(multiplier_Mu(lw, u) * multiplier_Mu(lv, u))
        worst = max(worst, max(abs(lhs[k] - rhs.get(k, 0)) for k in lhs))
    assert worst <= 1e-12
    for s in range(10):
        a = random_element(2, 8, size=6, seed=s)
        u, v = rng.integers(0, 8, 2), rng.integers(0, 8, 2)
        assert abs(trace(multiplier_Mu(a, u)) - trace(a)) < 1e-12
        uv = as_dict(multiplier_Mu(multiplier_Mu(a, u), v))
        assert uv == pytest.approx(as_dict(multiplier_Mu(a, (u + v) % 8)))
        for p in (2, 4, 6):
            assert freelp_norm_even(multiplier_Mu(a, u), p) == pytest.approx(freelp_norm_even(a, p), rel=1e-12)


def test_norm_examples():
    w = W([(0, 3), (1, 1), (0, 2)])
    for p in (2, 4, 6, 8):
        assert freelp_norm_even(FreeElement.lam(w, 2, 8), p) == pytest.approx(1.0)
    a = FreeElement(1, 8, {((0, 1),): 1, ((0, 7),): 1})
    assert freelp_norm_even(a, 4) == pytest.approx(6 ** 0.25, rel=1e-12)
    x = np.arange(8)
    want = np.mean((2 * np.cos(2 * np.pi * x / 8)) ** 4) ** 0.25
    assert freelp_norm_even(a, 4) == pytest.approx(want, rel=1e-12)
    with pytest.raises(ValueError):
        freelp_norm_even(a, 3)


def test_norms_match_oracle_and_parseval():
    for s in range(10):
        a = random_element(2, 8, size=5, max_len=2, seed=s)
        assert freelp_pow_even(a, 2) == pytest.approx(a.l2_squared(), rel=1e-13)
        d = as_dict(a)
        d["N"] = 8
        for p in (4, 6):
            assert freelp_pow_even(a, p) == pytest.approx(oracles.free_lp_pow(d, p).real, rel=1e-10)


def test_n1_matches_lattice_norm():
    for s in range(5):
        a = random_element(1, 16, size=6, seed=s)
        f = to_lattice(a)
        for p in (2, 4, 6):
            assert freelp_norm_even(a, p) == pytest.approx(lp_norm(f, p), rel=1e-10)
        assert np.allclose(dft(f).values.reshape(-1)[1], a.coeff(((0, 1),)))


def test_free_group_variant():
    rng = np.random.default_rng(11)
    for _ in range(2000):
        a, b, c = (random_word(2, None, 4, rng) for _ in range(3))
        assert (a * b) * c == a * (b * c)
        theta, phi = rng.random(2), rng.random(2)
        assert abs(chi_theta(a * b, theta) - chi_theta(a, theta) * chi_theta(b, theta)) < 1e-12
        assert abs(chi_theta(a, theta) * chi_theta(a, phi) - chi_theta(a, theta + phi)) < 1e-12
    a = random_element(2, None, size=6, seed=12)
    u = (3, 5)
    for p in (2, 4):
        assert freelp_norm_even(multiplier_Mu(a, u, m=1), p) == pytest.approx(freelp_norm_even(a, p), rel=1e-12)
    assert abs(trace(multiplier_Mu(a, u, m=1)) - trace(a)) < 1e-12
    with pytest.raises(ValueError):
        multiplier_Mu(a, u)


def test_lattice_roundtrip():
    a = random_element(1, 8, size=4, seed=13)
    b = from_lattice(to_lattice(a))
    for w in set(a.coeffs) | set(b.coeffs):
        assert abs(a.coeff(w) - b.coeff(w)) < 1e-12
    assert isinstance(to_lattice(a), LatticeFunction) and to_lattice(a).shape == GroupShape((8,))
