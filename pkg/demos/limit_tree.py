"""The limit tree T_k seen from its root.

The exact ball law is a sum over valid rooted trees. Two samplers should
match it: the multi-type branching process for T_k, and the 1-out model
at large d.
"""
import math
from collections import Counter

import numpy as np

from detlocal.experiments import tv_distance
from detlocal.limit import BallDistribution, sample_one_out_ball, sample_tk_ball, tk_distribution

rng = np.random.default_rng(3)
for k, r, t in [(1, 2, 41), (2, 2, 31), (1, 4, 39)]:
    exact = tk_distribution(k, r, t)
    print(f"k={k} r={r}: {len(exact.entries)} trees up to {t} vertices, residual {exact.residual:.1e}")
    top = sorted(exact.entries.items(), key=lambda kv: -kv[1])[:3]
    for code, p in top:
        print(f"    {code.decode():<40} {p:.5f}")
    n = 20_000
    emp_tk = BallDistribution.from_counts(Counter(sample_tk_ball(k, r, rng).code for _ in range(n)), 0, r, k)
    emp_oo = BallDistribution.from_counts(
        Counter(sample_one_out_ball(k, 10_000, r, rng).code for _ in range(n)), 0, r, k)
    # at r=4 the law spreads over ~2000 shapes, so 20k draws leave TV noise near 0.03
    print(f"    TV exact-vs-T_k sampler {tv_distance(exact, emp_tk):.4f}, "
          f"exact-vs-1-out {tv_distance(exact, emp_oo):.4f} ({n} draws)")

# at radius 2 the root has c branches with probability e^-k c k^(c-1) / c!
k = 2
print("root branching at k=2:", [round(math.exp(-k) * c * k ** (c - 1) / math.factorial(c), 4)
                                 for c in range(1, 7)])
