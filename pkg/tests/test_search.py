import json
import math
import os

import pytest

from xplab.inequality import eval_np
from xplab.search import (
    SearchConfig,
    evaluate_witness,
    extremal_witness,
    maximize_ratio,
    sharpness_scan,
)
from xplab.serialize import decode_function

HERE = os.path.dirname(__file__)


def cfg(**kw):
    base = dict(evaluator="eval_cyclic", params=dict(n=3, k=1, m=2, ell=1, p=4), budget=100, seed=3)
    base.update(kw)
    return SearchConfig(**base)


def test_budget_one_is_reproducible():
    a, b = maximize_ratio(cfg(budget=1)), maximize_ratio(cfg(budget=1))
    assert a.best_ratio == b.best_ratio and a.witness == b.witness and a.best_trial == 0


def test_config_validation():
    with pytest.raises(ValueError):
        cfg(budget=0)
    with pytest.raises(ValueError):
        cfg(strategy="anneal")
    with pytest.raises(ValueError):
        cfg(evaluator="eval_torus")


def test_budget_monotone_same_prefix():
    prev = -math.inf
    for budget in (10, 20, 40, 80, 160, 320):
        r = maximize_ratio(cfg(budget=budget)).best_ratio
        assert r >= prev
        prev = r


@pytest.mark.parametrize("strategy", ["random", "random+hill-climb"])
def test_worker_count_does_not_matter(strategy):
    runs = [maximize_ratio(cfg(budget=300, strategy=strategy, max_climb=150, workers=w)) for w in (1, 2, 4)]
    assert all(r.best_ratio == runs[0].best_ratio and r.witness == runs[0].witness for r in runs)


@pytest.mark.parametrize("evaluator,params", [
    ("eval_np", dict(n=4, k=2, p=4)),
    ("eval_rp1", dict(n=3, k=1, p=4)),
    ("eval_cyclic", dict(n=2, k=1, m=1, ell=2, p=4)),
    ("eval_nc", dict(n=2, k=1, m=1, p=4)),
])
def test_witness_roundtrip(evaluator, params):
    res = maximize_ratio(SearchConfig(evaluator, params, budget=64, strategy="random+hill-climb", max_climb=50))
    again = evaluate_witness(evaluator, res.params, json.loads(json.dumps(res.witness)))
    assert abs(again.ratio - res.best_ratio) <= 1e-10 * max(1, res.best_ratio)
    assert res.roundtrip_error <= 1e-10


def test_beats_regression_witnesses():
    with open(os.path.join(HERE, "data", "np_witnesses.json"), encoding="utf-8") as fh:
        corpus = json.load(fh)
    assert len(corpus["rows"]) == 20
    res = maximize_ratio(SearchConfig("eval_np", dict(n=4, k=2, p=4), budget=10**3, strategy="random+hill-climb"))
    for row in corpus["rows"]:
        recorded = eval_np(decode_function(row["witness"]), 4, 2).ratio
        assert abs(recorded - row["ratio"]) <= 1e-10
        assert res.best_ratio >= recorded


def test_trace_is_kept_on_request():
    res = maximize_ratio(cfg(budget=20, keep_trace=True, strategy="random+hill-climb", max_climb=30))
    assert [t[1] for t in res.trace if t[0] == "random"] == list(range(20))
    assert res.climb_steps <= 30


def test_extremal_scan_monotone_in_m():
    rows = sharpness_scan("eval_cyclic", n_list=(4, 8), k=1, m_list=(1, 2, 3, 4))
    for n in (4, 8):
        ratios = [r["ratio"] for r in rows if r["n"] == n]
        assert all(a >= b for a, b in zip(ratios, ratios[1:]))
    assert [r["meets_threshold"] for r in rows if r["n"] == 4] == [False, True, True, True]


def test_scan_k_equals_n_is_bounded():
    rows = sharpness_scan("eval_cyclic", n_list=(4,), k=4, m_list=(1, 2, 4, 8))
    assert all(r["meets_threshold"] for r in rows)
    assert max(r["ratio"] for r in rows) < 10


def test_scan_with_search_and_nc():
    rows = sharpness_scan("eval_nc", n_list=(2,), k=1, m_list=(1, 2), witness="search", budget=64)
    assert len(rows) == 2 and all(r["ratio"] > 0 for r in rows)
    with pytest.raises(ValueError):
        sharpness_scan("eval_np")


def test_extremal_witness_shape():
    f = extremal_witness(3, 2, 1)
    assert f.shape.moduli == (16, 16, 16) and f.size == 3
