import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from xplab.lattice import GroupShape, LatticeFunction, character, dft, random_function
from xplab.norms import lp_pow
from xplab.operators import (
    CLASSICAL,
    HYPERCUBE,
    SPECTRAL,
    EtaMap,
    MultiplierFamily,
    cond_expect,
    derivative,
    eta_beta,
    h_map,
    t_s_average,
    translate,
    validate_multiplier_family,
)

moduli_st = st.lists(st.integers(1, 5), min_size=1, max_size=3).map(tuple)


def test_cond_expect_examples():
    shape = GroupShape((3, 4))
    f = random_function(shape, 2, seed=1)
    assert cond_expect(f, [0, 1]).allclose(f)
    mean = cond_expect(f, [])
    assert np.allclose(mean.values, f.values.mean(axis=(0, 1)))
    assert cond_expect(character(shape, (2, 0)), [0]).allclose(character(shape, (2, 0)))
    assert np.max(np.abs(cond_expect(character(shape, (2, 1)), [0]).values)) < 1e-14


@settings(max_examples=60, deadline=None)
@given(moduli_st, st.integers(1, 2), st.integers(0, 10**6), st.data())
def test_cond_expect_properties(moduli, d, seed, data):
    shape = GroupShape(moduli)
    f = random_function(shape, d, seed=seed)
    S = data.draw(st.sets(st.integers(0, len(moduli) - 1)))
    E = cond_expect(f, S)
    assert E.allclose(oracles_cond(f, moduli, S))
    assert cond_expect(E, S).allclose(E)
    assert cond_expect(f, S, method="fourier").allclose(E)
    for p in (2, 4, 6):
        assert lp_pow(E, p) <= lp_pow(f, p) * (1 + 1e-10)


def oracles_cond(f, moduli, S):
    return LatticeFunction(f.shape, oracles.cond_expect(f.values, moduli, sorted(S)))


def test_derivative_examples():
    shape = GroupShape((2, 2))
    const = LatticeFunction.from_array(shape, np.ones((2, 2)))
    for mode in (SPECTRAL, HYPERCUBE, CLASSICAL):
        assert np.max(np.abs(derivative(const, 0, mode).values)) < 1e-14
    W1 = character(shape, (1, 0))
    assert derivative(W1, 0, HYPERCUBE).allclose(W1 * 2)
    assert derivative(W1, 0, SPECTRAL).allclose(W1)
    assert np.max(np.abs(derivative(W1, 1, SPECTRAL).values)) < 1e-14
    with pytest.raises(ValueError):
        derivative(random_function(GroupShape((3,)), seed=0), 0, HYPERCUBE)


def test_classical_derivative_is_centered_multiplier():
    shape = GroupShape((8,))
    for w in range(8):
        wc = w - 8 if w > 4 else w
        chi = character(shape, (w,))
        assert derivative(chi, 0, CLASSICAL).allclose(chi * (2j * np.pi * wc / 8))


@settings(max_examples=40, deadline=None)
@given(moduli_st, st.integers(0, 10**6), st.data())
def test_spectral_identity(moduli, seed, data):
    f = random_function(GroupShape(moduli), 2, seed=seed)
    j = data.draw(st.integers(0, len(moduli) - 1))
    rest = [i for i in range(len(moduli)) if i != j]
    assert derivative(f, j, SPECTRAL).allclose(f - cond_expect(f, rest))


def test_translate_examples_and_modulation():
    shape = GroupShape((8, 8))
    f = random_function(shape, 1, seed=2)
    assert translate(f, (0, 0)).allclose(f)
    assert translate(translate(f, (3, 1)), (6, 7)).allclose(translate(f, (1, 0)))
    g = (3, 5)
    lhs = dft(translate(f, g)).values[..., 0, 0]
    F = dft(f).values[..., 0, 0]
    for w in itertools.product(range(8), range(8)):
        assert abs(lhs[w] - oracles.char(w, g, (8, 8)) * F[w]) < 1e-12
    with pytest.raises(ValueError):
        translate(f, (1, 2, 3))


def test_eta_beta_examples():
    assert [eta_beta(y, 1) for y in range(2)] == [-1, 1]
    assert [eta_beta(y, 2) for y in range(4)] == [-2, -1, 1, 2]
    for ell in range(1, 17):
        for y in range(2 * ell):
            assert -eta_beta(y, ell) == eta_beta(2 * ell - 1 - y, ell)
    with pytest.raises(ValueError):
        eta_beta(4, 2)


def test_eta_symmetric_inclusion():
    for eta in (EtaMap.beta(2, 3, 1), EtaMap.sign(3, 8), EtaMap.scaled_identity(2, 1, 3)):
        for k in range(eta.n + 1):
            for S in itertools.combinations(range(eta.n), k):
                assert eta.symmetric_for_subset(S)
    src, tgt = GroupShape((3,)), GroupShape((8,))
    EtaMap.custom(src, tgt, [[0, 1, -1]])
    with pytest.raises(ValueError):
        EtaMap.custom(src, tgt, [[0, 1, 2]])


def test_t_s_average_examples():
    eta = EtaMap.beta(1, 1, 1)
    f = character(GroupShape((8,)), (1,))
    assert np.max(np.abs(t_s_average(f, [0], eta).values)) < 1e-14
    g = random_function(GroupShape((8, 8)), 1, seed=3)
    assert t_s_average(g, [], EtaMap.beta(1, 2, 1)).allclose(g)
    eta2 = EtaMap.beta(2, 2, 1)
    chi = character(GroupShape((16, 16)), (3, 5))
    c = np.mean([oracles.char((3, 5), (2 * eta2((a, 0))[0], 0), (16, 16)) for a in range(4)])
    assert t_s_average(chi, [0], eta2).allclose(chi * c)


def test_h_map_is_odd_in_eta():
    eta = EtaMap.beta(1, 2, 1)
    f = random_function(GroupShape((8, 8)), 1, seed=0)
    assert (h_map(f, eta, (0, 1)) + h_map(f, eta, (1, 0))).allclose(LatticeFunction.zeros(f.shape))


def test_validator_examples():
    shape = GroupShape.cyclic(8, 2)
    eta = EtaMap.beta(1, 2, 1)
    rep = validate_multiplier_family(MultiplierFamily.translations(shape), eta, 1, trials=5)
    assert rep.passed and max(rep.product_deviation, rep.symmetry_deviation) <= 1e-10
    assert rep.boundedness_max <= 1 + 1e-10
    free = MultiplierFamily.free_characters(2, 1)
    assert validate_multiplier_family(free, eta, 1, trials=5).passed
    bad = MultiplierFamily(shape, lambda f, g: translate(f, g) * (1 + abs(shape.centered(g)[0])), "custom",
                           lambda rng: random_function(shape, seed=rng))
    rep = validate_multiplier_family(bad, eta, 1, trials=5)
    assert not rep.bounded_ok and not rep.passed


def test_family_group_law():
    shape = GroupShape((6, 4))
    fam = MultiplierFamily.modulations(shape)
    f = random_function(shape, 2, seed=9)
    a, b = (1, 3), (4, 2)
    assert fam.apply(fam.apply(f, a), b).allclose(fam.apply(f, shape.add(a, b)))
