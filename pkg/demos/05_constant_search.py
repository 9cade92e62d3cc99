"""Searching for large ratios: random trials, then hill-climbing.

The search is deterministic in (seed, budget) whatever the worker count, and
the reported maximum is recomputed from the serialized witness.
"""

import json

from xplab.search import SearchConfig, evaluate_witness, maximize_ratio

params = dict(n=4, k=2, p=4)
for strategy in ("random", "random+hill-climb"):
    for budget in (100, 1000):
        res = maximize_ratio(SearchConfig("eval_np", params, budget=budget, strategy=strategy, seed=0))
        print(f"{strategy:18s} budget {budget:5d}: best ratio {res.best_ratio:.5f} "
              f"(trial {res.best_trial}, {res.climb_steps} climb steps)")

res = maximize_ratio(SearchConfig("eval_cyclic", dict(n=4, k=1, m=2, ell=1, p=4), budget=500,
                                  strategy="random+hill-climb", seed=1, workers=4))
again = evaluate_witness("eval_cyclic", res.params, json.loads(json.dumps(res.witness)))
print(f"\neval_cyclic n=4 k=1 m=2: {res.best_ratio:.6f}; witness re-evaluates to {again.ratio:.6f}")
