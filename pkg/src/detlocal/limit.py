"""The limit tree T_k: exact ball law, branching-process sampler, finite-d 1-out model.

T_k is a four-type branching process. The root is a-even;
an a-even particle has one a-odd child and Poisson(k) b-odd children,
a b-even particle has Poisson(k) b-odd children, an a-odd particle has k
a-even children, and a b-odd particle has k-1 a-even children and one
b-even child.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rootedtrees import (RootedBipTree, aut_size, enumerate_valid_trees, is_valid,
                          matching_count, parts)

SIZE_GUARD = 10**6


@dataclass
class BallDistribution:
    """Probability mass over canonical codes plus an explicit residual bucket."""

    entries: dict[bytes, float]
    residual: float
    radius: int
    k: int
    meta: dict = field(default_factory=dict)

    def total(self) -> float:
        return float(sum(self.entries.values()) + self.residual)

    def get(self, code: bytes) -> float:
        return self.entries.get(code, 0.0)

    def to_rows(self) -> list[tuple[str, float]]:
        rows = sorted(self.entries.items(), key=lambda kv: (-kv[1], kv[0]))
        return [(c.decode(), p) for c, p in rows]

    @classmethod
    def from_counts(cls, counts: dict, residual_count: int, radius: int, k: int) -> "BallDistribution":
        total = sum(counts.values()) + residual_count
        if total == 0:
            raise ValueError("no observations")
        return cls({c: v / total for c, v in counts.items()}, residual_count / total, radius, k,
                   {"observations": total})


def tk_ball_mass(t: RootedBipTree, k: int) -> float:
    """P(B_{T_k}(rho, r) = t) = e^{-k|I|} (k!)^{|U|} m(I, t) / |Aut(t)|."""
    if not is_valid(t, k):
        raise ValueError("tree is not valid for this k")
    _, odd, inner = parts(t)
    m = matching_count(t, inner)
    if m == 0:
        return 0.0
    log = (-k * len(inner) + len(odd) * math.lgamma(k + 1) + math.log(m)
           - math.log(aut_size(t)))
    return math.exp(log)


def tk_distribution(k: int, radius: int, max_vertices: int,
                    budget: int = 100_000) -> BallDistribution:
    """Exact masses of every valid tree of height ``radius`` up to ``max_vertices`` vertices."""
    if radius % 2:
        raise ValueError("radius must be even")
    entries = {}
    for t in enumerate_valid_trees(k, radius, max_vertices, budget):
        p = tk_ball_mass(t, k)
        if p > 0:
            entries[t.code] = p
    residual = 1.0 - sum(entries.values())
    return BallDistribution(entries, max(residual, 0.0), radius, k,
                            {"max_vertices": max_vertices, "raw_residual": residual})


def poisson(lam: float, rng: np.random.Generator) -> int:
    """Poisson variate by sequential inversion of the CDF."""
    u = rng.random()
    p = math.exp(-lam)
    c = p
    x = 0
    while u > c:
        x += 1
        p *= lam / x
        c += p
        if p == 0.0:
            break
    return x


def _grow(root_type, offspring, radius, rng):
    parent = [-1]
    types = [root_type]
    depth = [0]
    frontier = [0]
    while frontier:
        nxt = []
        for v in frontier:
            if depth[v] >= radius:
                continue
            for ct in offspring(types[v], rng):
                parent.append(v)
                types.append(ct)
                depth.append(depth[v] + 1)
                nxt.append(len(parent) - 1)
                if len(parent) > SIZE_GUARD:
                    raise RuntimeError(f"ball exceeded {SIZE_GUARD} vertices")
        frontier = nxt
    return RootedBipTree(tuple(parent))


def sample_tk_ball(k: int, radius: int, rng: np.random.Generator) -> RootedBipTree:
    """Radius-``radius`` ball of T_k, types stripped."""
    if radius < 0 or radius % 2:
        raise ValueError("radius must be a non-negative even integer")

    def offspring(t, rng):
        if t == "a-even":
            return ["a-odd"] + ["b-odd"] * poisson(k, rng)
        if t == "b-even":
            return ["b-odd"] * poisson(k, rng)
        if t == "a-odd":
            return ["a-even"] * k
        return ["a-even"] * (k - 1) + ["b-even"]

    return _grow("a-even", offspring, radius, rng)


def sample_one_out_ball(k: int, d: int, radius: int, rng: np.random.Generator) -> RootedBipTree:
    """Radius-``radius`` ball of the root component in the (k, d) 1-out model.

    Even particles draw X_1..X_d ~ Binomial(k, 1/(d+1)). The counts of
    X_i = j over a block of indices are drawn jointly as one multinomial,
    which has the same law as d independent binomial draws.
    """
    if radius < 0 or radius % 2:
        raise ValueError("radius must be a non-negative even integer")
    if d < k + 1:
        raise ValueError("need d >= k + 1")
    q = 1.0 / (d + 1)
    pj = np.array([math.comb(k, j) * q**j * (1 - q) ** (k - j) for j in range(k + 1)])
    pj /= pj.sum()

    def offspring(t, rng):
        if t == "a-even":
            x1 = int(rng.binomial(k, q))
            counts = rng.multinomial(d - 1, pj)
            kids = [x1]
            for j in range(1, k + 1):
                kids += [j] * int(counts[j])
            return kids
        if t == "b-even":
            counts = rng.multinomial(d, pj)
            kids = []
            for j in range(1, k + 1):
                kids += [j] * int(counts[j])
            return kids
        # t is an int j: j-odd
        return ["b-even"] * t + ["a-even"] * (k - t)

    return _grow("a-even", offspring, radius, rng)
