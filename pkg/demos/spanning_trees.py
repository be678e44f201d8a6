"""Uniform spanning trees of K_n as a determinantal measure on edges.

The row space of the signed incidence matrix is a projection kernel. Its
determinantal measure puts mass 1/n^(n-2) on every spanning tree.
"""
import itertools
from collections import Counter

import numpy as np

from detlocal import dpp
from detlocal.incidence import build
from detlocal.spectral import decompose, projection_subspace

g = build("ust", n=4)
h = projection_subspace(decompose(g))
edges = list(itertools.combinations(range(4), 2))

# brute force: every 3-edge set with nonzero determinant is a tree
pairs = dpp.enumerate_all(h)
print(f"K4: {len(pairs)} sets with positive mass (Cayley: 4^2 = 16)")
for s, w in pairs[:4]:
    print("  ", [edges[u] for u in s.members], f"{w:.6f}")
print("   ...")

# each edge is in a uniform spanning tree with probability (n-1)/C(n,2) = 1/2
print("edge marginals:", np.round([dpp.marginal(h, [u]) for u in range(6)], 6))

# both samplers against the uniform law
rng = np.random.default_rng(1)
n = 20_000
for name, draw in [("sequential", lambda: dpp.sample(h, rng)),
                   ("incidence", lambda: dpp.IncidenceSampler(g).sample(rng))]:
    counts = Counter(draw().members for _ in range(n))
    tv = 0.5 * sum(abs(counts.get(s.members, 0) / n - w) for s, w in pairs)
    print(f"{name:>10} sampler, {n} draws: TV to uniform = {tv:.4f}")

# negative correlation of two edges sharing a vertex
a, b = [0], [1]
print(f"P(e0, e1) = {dpp.marginal(h, a + b):.4f} <= P(e0) P(e1) = "
      f"{dpp.marginal(h, a) * dpp.marginal(h, b):.4f}")
