"""Grid metrics, the rounded circle embedding, and the distortion lower bound."""

import numpy as np

from xplab.distortion import (
    EmbeddingCandidate,
    GridSpec,
    circle_metric,
    comparability,
    compose_with_h,
    distortion_bound,
    measure_distortion,
    snowflake_bound,
)

for m in (8, 12, 32):
    for q in (2, 4):
        c = comparability(m, 2, q)
        print(f"h on Z_{m}^2, q={q}: ratio to the circle metric in [{c.c1:.4f}, {c.c2:.4f}], spread {c.spread:.4f}")

spec = GridSpec(4, 2, 3)
pts = spec.points()
print("\nidentity [4]_3^2 -> l_4:", round(measure_distortion(EmbeddingCandidate(pts, pts * 1.0, 4), spec), 6))
bent = EmbeddingCandidate.from_map(pts, lambda x: np.append(x, x[0] * x[1] / 4), 4)
print("graph of x1 x2 / 4 into l_4:", round(measure_distortion(bent, spec), 6))

F = compose_with_h(lambda v: v, 8, 2, 4)
print("h itself, Z_8^2 with the scaled circle metric (q=3) -> l_4:",
      round(measure_distortion(F, domain_metric=circle_metric(8, 3)), 6))

print("\nlower bound min{n^a, m^(1-2/q)} at the suggested k and m (p=4, q=3):")
for n in (2**6, 2**12, 2**20):
    m = distortion_bound(n, 1, 4, 3).m_choice
    b = distortion_bound(n, m, 4, 3)
    print(f"n=2^{int(np.log2(n)):2d}: bound {b.value:.5f}, k={b.k}, m={b.m_choice}, m^2 k >= n: {b.threshold_ok}")
print("snowflake exponents:", snowflake_bound(4, 3), snowflake_bound(6, 3))
