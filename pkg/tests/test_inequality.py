import itertools
import math

import numpy as np
import pytest

import oracles
from xplab.freealg import FreeElement, random_element, to_lattice
from xplab.inequality import (
    InputError,
    RepresentablePair,
    eval_cyclic,
    eval_free_transfer,
    eval_nc,
    eval_np,
    eval_rp1,
    eval_theorem_a,
    eval_torus,
    fs_identity_gap,
    h_integral,
    lema8_terms,
    subsets,
    torus_trigpoly,
)
from xplab.lattice import GroupShape, LatticeFunction, character, random_function
from xplab.operators import SPECTRAL, EtaMap, MultiplierFamily, translate
from xplab.sparse import random_trigpoly


def mean_zero(f):
    axes = tuple(range(f.shape.n))
    return LatticeFunction(f.shape, f.values - f.values.mean(axis=axes, keepdims=True))


def same(rep, want, tol=1e-10):
    for a, b in zip(rep.components, want):
        assert abs(a - b) <= tol * max(1.0, abs(b))


def test_eval_np_examples():
    shape = GroupShape.cyclic(2, 2)
    rep = eval_np(LatticeFunction.zeros(shape), 4, 1)
    assert rep.components == (0, 0, 0) and rep.ratio is None
    rep = eval_np(character(shape, (1, 0)), 2, 1)
    same(rep, (0.5, 2.0, 0.5))
    assert rep.m_factor == 1 and rep.subset_mode == "exact"


def test_eval_np_matches_oracle_all_k():
    f = mean_zero(random_function(GroupShape.cyclic(2, 6), seed=3))
    for k in range(1, 7):
        same(eval_np(f, 4, k), oracles.eval_np(f.values, 4, k))


def test_mean_zero_rejected():
    f = random_function(GroupShape.cyclic(2, 3), seed=0)
    with pytest.raises(InputError):
        eval_np(f, 4, 1)
    with pytest.raises(InputError):
        eval_np(mean_zero(random_function(GroupShape((4,)), seed=0)), 4, 1)


def test_eval_rp1_examples():
    shape = GroupShape.cyclic(2, 3)
    A = np.array([[1, 2j], [0, -1]])
    h = LatticeFunction(shape, character(shape, (1, 1, 1)).values * A)
    for k in (1, 2):
        assert eval_rp1(h, 4, k).lhs == pytest.approx(0, abs=1e-14)
    f = mean_zero(random_function(GroupShape.cyclic(2, 4), seed=1))
    a, b = eval_rp1(f, 4, 2), eval_np(f, 4, 2)
    assert a.components == pytest.approx(b.components, rel=1e-14)


def test_eval_rp1_spectral_and_matrix():
    moduli = (3, 4, 2)
    h = mean_zero(random_function(GroupShape(moduli), 2, seed=2))
    for k in (1, 2, 3):
        same(eval_rp1(h, 3, k, SPECTRAL), oracles.eval_rp1_spectral(h.values, moduli, 3, k))
    rep = eval_rp1(mean_zero(random_function(GroupShape.cyclic(2, 4), 2, seed=5)), 4, 2)
    assert rep.ratio is not None and math.isfinite(rep.ratio)


def test_eval_cyclic_single_character():
    f = character(GroupShape((8,)), (1,))
    rep = eval_cyclic(f, 4, 1, 1, 1)
    assert rep.lhs == pytest.approx(16)
    lhs, deriv, full, mf = oracles.eval_cyclic(f.values, 4, 1, 1, 1)
    same(rep, (lhs, deriv, full))
    assert rep.ratio == pytest.approx(oracles.ratio(lhs, deriv, full, mf))
    assert eval_cyclic(LatticeFunction.from_array(GroupShape((8,)), np.ones(8)), 4, 1, 1).ratio is None


@pytest.mark.parametrize("n,k,m,ell,p", [(2, 1, 1, 1, 4), (2, 2, 1, 2, 3), (3, 2, 1, 1, 2.5), (2, 1, 2, 1, 4)])
def test_eval_cyclic_oracle(n, k, m, ell, p):
    f = random_function(GroupShape.cyclic(8 * ell * m, n), seed=n + k)
    lhs, deriv, full, mf = oracles.eval_cyclic(f.values, p, k, m, ell)
    rep = eval_cyclic(f, p, k, m, ell)
    same(rep, (lhs, deriv, full))
    assert rep.m_factor == mf
    assert rep.meets_threshold == (m * m * k >= n)


def test_eval_cyclic_shape_mismatch():
    with pytest.raises(InputError):
        eval_cyclic(random_function(GroupShape((8, 16)), seed=0), 4, 1, 1)


def test_sparse_path_matches_dense():
    shape = GroupShape.cyclic(16, 3)
    t = random_trigpoly(shape, 5, seed=4)
    for k in (1, 2, 3):
        a = eval_cyclic(t, 4, k, 1, 2)
        b = eval_cyclic(t.to_lattice(), 4, k, 1, 2)
        same(a, b.components, 1e-9)


def test_extremal_ratio_monotone_in_m():
    ratios = []
    for m in (1, 2, 4):
        n, N = 4, 8 * m
        f = torus_trigpoly(n, m, 1, [(tuple(int(i == j) for i in range(n)), 1.0) for j in range(n)])
        assert f.shape == GroupShape.cyclic(N, n)
        ratios.append(eval_cyclic(f, 4, 1, m).ratio)
    assert ratios[0] >= ratios[1] >= ratios[2]


def test_invariances():
    f = random_function(GroupShape.cyclic(8, 3), seed=6)
    base = eval_cyclic(f, 4, 2, 1)
    for c in (2.5, -1j, 1e-3):
        assert eval_cyclic(f * c, 4, 2, 1).ratio == pytest.approx(base.ratio, rel=1e-10)
    shifted = eval_cyclic(translate(f, (3, 1, 7)), 4, 2, 1)
    assert shifted.ratio == pytest.approx(base.ratio, rel=1e-12)


def test_sampled_equals_exact():
    f = mean_zero(random_function(GroupShape.cyclic(2, 6), seed=7))
    exact = eval_np(f, 4, 3)
    total = math.comb(6, 3)
    sampled = eval_np(f, 4, 3, subset_mode="sampled", count=total, seed=11)
    assert sampled.subset_mode == f"sampled({total},11)"
    assert sampled.components == exact.components
    assert subsets(6, 3, "sampled", total, 5)[0] == subsets(6, 3)[0]


def test_auto_mode_samples_large_families():
    subs, label = subsets(20, 10)
    assert label.startswith("sampled") and len(subs) == 10**4 and len(set(subs)) == 10**4


def test_eval_nc_diag_example():
    shape = GroupShape((8,))
    F = np.zeros((8, 2, 2), complex)
    for x in range(8):
        F[x] = np.diag([np.exp(2j * np.pi * x / 8), np.exp(2j * np.pi * 2 * x / 8)])
    f = LatticeFunction(shape, F)
    lhs, deriv, full, mf = oracles.eval_nc(F, 4, 1, 1)
    same(eval_nc(f, 4, 1, 1), (lhs, deriv, full))


def test_eval_nc_scalar_and_unitary():
    f = random_function(GroupShape.cyclic(8, 2), seed=8)
    assert eval_nc(f, 4, 1, 1).components == pytest.approx(eval_cyclic(f, 4, 1, 1).components, rel=1e-10)
    g = random_function(GroupShape.cyclic(8, 2), 3, seed=9)
    q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((3, 3)) + 1j * np.random.default_rng(1).standard_normal((3, 3)))
    h = LatticeFunction(g.shape, q @ g.values @ q.conj().T)
    a, b = eval_nc(g, 3, 2, 1), eval_nc(h, 3, 2, 1)
    assert a.components == pytest.approx(b.components, rel=1e-10)


def test_theorem_a_specializes():
    f = random_function(GroupShape.cyclic(8, 3), seed=10)
    pair = RepresentablePair(EtaMap.beta(1, 3, 1), MultiplierFamily.translations(f.shape))
    for k in (1, 2, 3):
        a, b = eval_theorem_a(f, pair, 4, k, 1), eval_cyclic(f, 4, k, 1)
        same(a, b.components)
    const = LatticeFunction.from_array(f.shape, np.full((8, 8, 8), 2.0))
    assert eval_theorem_a(const, pair, 4, 1, 1).ratio is None


def test_theorem_a_single_character_oracle():
    shape = GroupShape.cyclic(16, 2)
    eta = EtaMap.beta(2, 2, 1)
    chi = character(shape, (3, 5))
    table = [[oracles.centered(v, 16) for v in eta.table[j]] for j in range(2)]
    for k in (1, 2):
        rep = eval_theorem_a(chi, RepresentablePair(eta), 4, k, 1)
        same(rep, oracles.eval_theorem_a(chi.values, (16, 16), table, 4, k, 1)[:3], 1e-12)


def test_theorem_a_rejects_bad_family():
    shape = GroupShape.cyclic(8, 2)
    bad = MultiplierFamily(
        shape, lambda f, g: translate(f, g) * (1 + abs(shape.centered(g)[0])), "custom",
        lambda rng: random_function(shape, seed=rng),
    )
    with pytest.raises(InputError):
        eval_theorem_a(random_function(shape, seed=0), RepresentablePair(EtaMap.beta(1, 2, 1), bad), 4, 1, 1)


def test_eval_torus_variants():
    f = torus_trigpoly(2, 1, 2, [((1, 0), 1.0), ((0, -2), 0.5j), ((1, 1), -0.3)]).to_lattice()
    for variant in ("uniform-eta", "sign-eta", "classical-derivative"):
        rep = eval_torus(f, 4, 1, 1, variant, 2)
        want = oracles.eval_torus(f.values, 4, 1, 1, variant, 2)
        same(rep, want[:3])
    const = LatticeFunction.from_array(GroupShape.cyclic(8, 2), np.ones((8, 8)))
    assert eval_torus(const, 4, 1, 1).ratio is None
    with pytest.raises(InputError):
        eval_torus(f, 4, 1, 1, "uniform-eta", 1)


def _refinement_ratios(ells):
    terms = [((1, 0), 1.0), ((0, 1), 1.0), ((1, -1), 0.5)]
    return [eval_torus(torus_trigpoly(2, 1, ell, terms), 4, 1, 1, "uniform-eta", ell).ratio for ell in ells]


def test_torus_refinement_is_first_order():
    r = _refinement_ratios((2, 4, 8, 16, 32))
    gaps = [abs(b - a) for a, b in zip(r, r[1:])]
    # beta_ell samples sit at k / 2 ell, a one-sided Riemann rule: gaps halve
    for a, b in zip(gaps, gaps[1:]):
        assert 0.4 < b / a < 0.7
    assert gaps[-2] < 0.1 * r[-2]


@pytest.mark.xfail(strict=True, reason="first-order convergence: the ell=4 -> 8 step moves the ratio by ~14%")
def test_torus_refinement_within_ten_percent_at_ell_8():
    r = _refinement_ratios((4, 8))
    assert abs(r[1] - r[0]) < 0.1 * r[0]


def test_free_transfer_examples():
    e = FreeElement.identity(2, 8)
    assert eval_free_transfer(e, 4, 1, 1).ratio is None
    a = FreeElement(2, 8, {((0, 1),): 1, ((1, 1),): 1})
    rep = eval_free_transfer(a, 4, 1, 1)
    d = dict(a.coeffs)
    d["N"] = 8
    same(rep, oracles.eval_free_transfer(d, 2, 4, 1, 1)[:3])
    assert rep.ratio is not None and math.isfinite(rep.ratio)
    with pytest.raises(InputError):
        eval_free_transfer(a, 3, 1, 1)


def test_free_transfer_abelian_reduction():
    a = random_element(1, 16, size=6, seed=3)
    assert eval_free_transfer(a, 4, 1, 2).components == pytest.approx(
        eval_cyclic(to_lattice(a), 4, 1, 2).components, rel=1e-10
    )


def test_free_group_variant_runs():
    a = random_element(2, None, size=4, max_len=2, seed=5)
    rep = eval_free_transfer(a, 4, 1, 1)
    assert rep.params["group"] == "free-group" and rep.lhs >= 0


def test_proof_identities():
    f = random_function(GroupShape.cyclic(8, 3), seed=12)
    eta = EtaMap.beta(1, 3, 1)
    rng = np.random.default_rng(0)
    for _ in range(10):
        S = [j for j in range(3) if rng.random() < 0.5]
        y = tuple(int(v) for v in rng.integers(0, 2, 3))
        assert fs_identity_gap(f, eta, S, y) < 1e-10
    assert np.max(np.abs(h_integral(f, eta).values)) < 1e-10
    for S in itertools.chain.from_iterable(itertools.combinations(range(3), r) for r in range(4)):
        lhs, rhs = lema8_terms(f, eta, S, 4)
        assert lhs <= 4**4 * rhs * (1 + 1e-10)
