"""Brute-force oracles shared by the test modules.

Nothing here uses canonical codes or the matching DP, so the oracles are
independent of the code under test.
"""

import itertools
from functools import lru_cache

import networkx as nx
import numpy as np
import pytest
import scipy.linalg

from detlocal.rootedtrees import RootedBipTree


def children_lists(parent):
    ch = [[] for _ in parent]
    for v, p in enumerate(parent):
        if p >= 0:
            ch[p].append(v)
    return ch


def root_of(parent):
    return parent.index(-1)


def count_isomorphisms(p1, p2):
    """Root-preserving isomorphisms from tree p1 to tree p2, by backtracking over child bijections."""
    c1, c2 = children_lists(p1), children_lists(p2)
    memo = {}

    def iso(a, b):
        key = (a, b)
        if key in memo:
            return memo[key]
        ka, kb = c1[a], c2[b]
        if len(ka) != len(kb):
            memo[key] = 0
            return 0
        total = 0

        def rec(i, used, acc):
            nonlocal total
            if i == len(ka):
                total += acc
                return
            for j, cb in enumerate(kb):
                if used >> j & 1:
                    continue
                x = iso(ka[i], cb)
                if x:
                    rec(i + 1, used | (1 << j), acc * x)

        rec(0, 0, 1)
        memo[key] = total
        return total

    return iso(root_of(p1), root_of(p2))


def is_isomorphic(p1, p2):
    if len(p1) != len(p2):
        return False
    return count_isomorphisms(p1, p2) > 0


def labelled_trees(n):
    """Every parent array on n vertices with root 0 and parent[i] < i."""
    if n == 1:
        yield (-1,)
        return
    for tail in itertools.product(*[range(i) for i in range(1, n)]):
        yield (-1,) + tail


@lru_cache(maxsize=None)
def _rooted_shapes(n):
    # unlabeled rooted trees on n vertices as nested tuples of children, each sorted
    if n == 1:
        return ((),)
    out = set()
    for forest in _forests(n - 1, n - 1):
        out.add(tuple(sorted(forest)))
    return tuple(sorted(out))


@lru_cache(maxsize=None)
def _forests(total, max_part):
    # multisets of rooted trees with sizes summing to total, as sorted tuples
    if total == 0:
        return ((),)
    res = set()
    for size in range(1, min(total, max_part) + 1):
        for t in _rooted_shapes(size):
            for rest in _forests(total - size, size):
                res.add(tuple(sorted((t,) + rest)))
    return tuple(sorted(res))


def shape_to_parent(shape):
    parent = [-1]

    def add(node, p):
        for child in node:
            parent.append(p)
            add(child, len(parent) - 1)

    add(shape, 0)
    return tuple(parent)


def unlabeled_trees(n):
    """One parent array per isomorphism class of rooted trees on n vertices."""
    return [shape_to_parent(s) for s in _rooted_shapes(n)]


def brute_matchings(parent):
    """All matchings of the tree as frozensets of (child, parent) edges."""
    edges = [(v, p) for v, p in enumerate(parent) if p >= 0]
    out = []

    def rec(i, used, chosen):
        if i == len(edges):
            out.append(tuple(chosen))
            return
        rec(i + 1, used, chosen)
        a, b = edges[i]
        if a not in used and b not in used:
            chosen.append(edges[i])
            rec(i + 1, used | {a, b}, chosen)
            chosen.pop()

    rec(0, frozenset(), [])
    return out


def brute_matching_count(parent, K):
    depth = [0] * len(parent)
    for v in range(len(parent)):
        x, dd = v, 0
        while parent[x] >= 0:
            x, dd = parent[x], dd + 1
        depth[v] = dd
    need = set(K) | {v for v in range(len(parent)) if depth[v] % 2}
    count = 0
    for m in brute_matchings(parent):
        covered = {x for e in m for x in e}
        if need <= covered:
            count += 1
    return count


def spanning_trees_kn(n):
    """Edge-index sets of all spanning trees of K_n, edges ordered as (i, j) with i < j lexicographically."""
    edges = list(itertools.combinations(range(n), 2))
    out = []
    for sub in itertools.combinations(range(len(edges)), n - 1):
        g = nx.Graph()
        g.add_nodes_from(range(n))
        g.add_edges_from(edges[i] for i in sub)
        if nx.is_tree(g):
            out.append(tuple(sub))
    return out


def random_relabel(t, rng):
    perm = rng.permutation(t.n)
    return t.relabel(perm)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ROOTED_TREE_COUNTS = [1, 1, 2, 4, 9, 20, 48, 115, 286, 719, 1842, 4766, 12486]


def star_k(c, k):
    """Height-2 valid tree: c odd children of the root, each with k leaves."""
    return RootedBipTree.from_children([[[] for _ in range(k)] for _ in range(c)])


def admissible_family(h, u, count, rng, max_tries=1000):
    """Random xi in h with xi(u) = 1 that are nearly orthogonal; returns (xis, gamma)."""
    q = h.basis
    pu = h.projection[:, u]
    base = pu / pu[u]
    null = scipy.linalg.null_space(q[:, u][None, :])
    for _ in range(max_tries):
        coef = rng.standard_normal((count, null.shape[1])) * rng.uniform(1, 6)
        xis = base + (coef @ null.T) @ q
        gram = xis @ xis.T
        sq = np.diag(gram)
        ratio = np.abs(gram) / np.minimum.outer(sq, sq)
        np.fill_diagonal(ratio, 0)
        gamma = ratio.max() * (1 + 1e-9) + 1e-12
        if gamma < 1 / count:
            return xis, gamma
    raise RuntimeError("no admissible family found")
