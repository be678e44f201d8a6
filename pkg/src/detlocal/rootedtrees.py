"""Rooted trees with even/odd height parity.

Even vertices play the role of V, odd vertices the role of U. Trees are
immutable and carry an AHU canonical code: a leaf is ``()`` and an
internal vertex is ``(`` + its sorted child codes + ``)``. Two rooted
trees are root-isomorphic exactly when their codes agree.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .spectral import Subspace

INT64_MAX = 2**63 - 1


@dataclass(frozen=True, eq=False)
class RootedBipTree:
    """Rooted tree given by a parent array; the root has parent -1.

    ``host`` optionally maps each vertex to an index in a host graph (a
    v-index for even vertices, a u-index for odd ones) and ``edge_sign``
    gives the sign of the edge from each vertex to its parent.
    """

    parent: tuple[int, ...]
    host: tuple[int, ...] | None = None
    edge_sign: tuple[int, ...] | None = None

    def __post_init__(self):
        par = tuple(int(p) for p in self.parent)
        object.__setattr__(self, "parent", par)
        roots = [i for i, p in enumerate(par) if p == -1]
        if len(roots) != 1:
            raise ValueError("a rooted tree needs exactly one root")
        if any(not -1 <= p < len(par) or p == i for i, p in enumerate(par)):
            raise ValueError("parent index out of range")
        if len(self.order) != len(par):
            raise ValueError("parent array is not a connected tree")

    @classmethod
    def single(cls) -> "RootedBipTree":
        return cls((-1,))

    @classmethod
    def from_children(cls, children) -> "RootedBipTree":
        """From nested lists: each vertex is the list of its children."""
        parent = [-1]
        stack = [(children, 0)]
        while stack:
            node, idx = stack.pop()
            for ch in node:
                parent.append(idx)
                stack.append((ch, len(parent) - 1))
        return cls(tuple(parent))

    @classmethod
    def from_code(cls, code) -> "RootedBipTree":
        if isinstance(code, bytes):
            code = code.decode()
        parent: list[int] = []
        stack: list[int] = []
        for ch in code:
            if ch == "(":
                parent.append(stack[-1] if stack else -1)
                stack.append(len(parent) - 1)
            elif ch == ")":
                if not stack:
                    raise ValueError("unbalanced code")
                stack.pop()
            else:
                raise ValueError(f"unexpected character {ch!r} in code")
        if stack or parent.count(-1) != 1:
            raise ValueError("code does not describe a single rooted tree")
        return cls(tuple(parent))

    @property
    def n(self) -> int:
        return len(self.parent)

    @cached_property
    def root(self) -> int:
        return self.parent.index(-1)

    @cached_property
    def _raw_children(self) -> list[list[int]]:
        ch: list[list[int]] = [[] for _ in self.parent]
        for i, p in enumerate(self.parent):
            if p >= 0:
                ch[p].append(i)
        return ch

    @cached_property
    def order(self) -> list[int]:
        """Vertices in breadth-first order from the root."""
        out = [self.parent.index(-1)] if -1 in self.parent else []
        ch = self._raw_children
        i = 0
        while i < len(out):
            out.extend(ch[out[i]])
            i += 1
        return out

    @cached_property
    def depth(self) -> tuple[int, ...]:
        dep = [0] * self.n
        for v in self.order[1:]:
            dep[v] = dep[self.parent[v]] + 1
        return tuple(dep)

    @property
    def height(self) -> int:
        return max(self.depth)

    def is_even(self, v: int) -> bool:
        return self.depth[v] % 2 == 0

    @cached_property
    def vertex_codes(self) -> tuple[bytes, ...]:
        codes: list[bytes] = [b""] * self.n
        ch = self._raw_children
        for v in reversed(self.order):
            codes[v] = b"(" + b"".join(sorted(codes[c] for c in ch[v])) + b")"
        return tuple(codes)

    @property
    def code(self) -> bytes:
        return self.vertex_codes[self.root]

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        """Child lists in canonical (code) order."""
        codes = self.vertex_codes
        return tuple(tuple(sorted(c, key=lambda x: (codes[x], x))) for c in self._raw_children)

    def degree(self, v: int) -> int:
        return len(self._raw_children[v]) + (self.parent[v] >= 0)

    def to_json(self) -> dict:
        return {"parent": list(self.parent), "code": self.code.decode()}

    @classmethod
    def from_json(cls, doc) -> "RootedBipTree":
        if isinstance(doc, str):
            doc = json.loads(doc)
        return cls(tuple(doc["parent"]))

    def relabel(self, perm) -> "RootedBipTree":
        """Same tree with vertex i renamed perm[i]."""
        perm = list(perm)
        par = [0] * self.n
        for i, p in enumerate(self.parent):
            par[perm[i]] = -1 if p < 0 else perm[p]
        return RootedBipTree(tuple(par))


def canonical_code(t: RootedBipTree) -> bytes:
    return t.code


def aut_size(t: RootedBipTree) -> int:
    """Number of root-preserving automorphisms.

    At each vertex, children whose subtrees are isomorphic may be permuted
    freely, so the count is the product over vertices of c! for each class
    of c isomorphic children, times the children's own counts.
    """
    codes = t.vertex_codes
    ch = t._raw_children
    aut = [1] * t.n
    for v in reversed(t.order):
        a = 1
        for c in ch[v]:
            a *= aut[c]
        for mult in Counter(codes[c] for c in ch[v]).values():
            a *= math.factorial(mult)
        aut[v] = a
    return aut[t.root]


def is_valid(t: RootedBipTree, k: int) -> bool:
    """Even height and every odd-height vertex of degree k + 1."""
    if t.height % 2:
        return False
    return all(t.degree(v) == k + 1 for v in range(t.n) if not t.is_even(v))


def parts(t: RootedBipTree) -> tuple[list[int], list[int], list[int]]:
    """(V(T), U(T), I(T)): even vertices, odd vertices, even vertices below full height."""
    h = t.height
    even = [v for v in range(t.n) if t.depth[v] % 2 == 0]
    odd = [v for v in range(t.n) if t.depth[v] % 2 == 1]
    inner = [v for v in even if t.depth[v] < h]
    return even, odd, inner


def matching_count(t: RootedBipTree, K=()) -> int:
    """m(K, T): matchings of T saturating K and every odd vertex.

    Bottom-up DP with two states per vertex: left free for its parent, or
    already matched inside its subtree.
    """
    K = set(int(x) for x in K)
    if any(not 0 <= v < t.n or not t.is_even(v) for v in K):
        raise ValueError("K must be a set of even vertices of t")
    ch = t._raw_children
    free = [0] * t.n     # v unmatched within its subtree
    done = [0] * t.n     # v matched to one of its children
    for v in reversed(t.order):
        ok = []           # per child: ways the child's subtree is complete without v
        for c in ch[v]:
            need = (not t.is_even(c)) or c in K
            ok.append(done[c] + (0 if need else free[c]))
        prod = 1
        for x in ok:
            prod *= x
        free[v] = prod
        total = 0
        if ch[v]:
            # prefix/suffix products avoid division by zero
            pre = [1]
            for x in ok:
                pre.append(pre[-1] * x)
            suf = 1
            for i in range(len(ok) - 1, -1, -1):
                total += free[ch[v][i]] * pre[i] * suf
                suf *= ok[i]
        done[v] = total
        if free[v] > INT64_MAX or done[v] > INT64_MAX:
            raise OverflowError("matching count exceeds 2^63")
    r = t.root
    need_root = r in K
    return done[r] + (0 if need_root else free[r])


def tree_incidence(t: RootedBipTree, signs=None) -> tuple[np.ndarray, list[int], list[int]]:
    """Signed V(T) x U(T) incidence D, with its row and column vertex lists.

    ``signs[v]`` is the sign of the edge from v to its parent; defaults to
    ``t.edge_sign`` and then to all +1.
    """
    even, odd, _ = parts(t)
    if signs is None:
        signs = t.edge_sign
    row = {v: i for i, v in enumerate(even)}
    col = {u: j for j, u in enumerate(odd)}
    d = np.zeros((len(even), len(odd)))
    for v, p in enumerate(t.parent):
        if p < 0:
            continue
        s = 1 if signs is None else int(signs[v])
        if t.is_even(v):
            d[row[v], col[p]] = s
        else:
            d[row[p], col[v]] = s
    return d, even, odd


def transversal_vector(t: RootedBipTree, K, v0: int, signs=None) -> np.ndarray:
    """phi over V(T) with phi^T D = 0, phi(v0) = 1 and least sum of squares off K.

    The least value of sum_{v not in K} phi(v)^2 equals
    m(K,T) / (m(K,T) - m(K + {v0}, T)). Entries are ordered as ``parts(t)[0]``.
    """
    K = sorted(set(int(x) for x in K))
    d, even, _ = tree_incidence(t, signs)
    pos = {v: i for i, v in enumerate(even)}
    if v0 not in pos or v0 in K:
        raise ValueError("v0 must be an even vertex outside K")
    if matching_count(t, K) == 0:
        raise ValueError("m(K, T) must be positive")
    kk = [pos[v] for v in K]
    jj = [i for i in range(len(even)) if i not in set(kk)]
    left_null = scipy.linalg.null_space(d.T) if d.shape[1] else np.eye(len(even))
    w_basis = scipy.linalg.orth(left_null[jj]) if left_null.size else np.zeros((len(jj), 0))
    e = np.zeros(len(jj))
    e[jj.index(pos[v0])] = 1.0
    pe = w_basis @ (w_basis.T @ e)
    alpha = float(pe @ pe)
    if alpha < 1e-12:
        raise ValueError("no vector with phi^T D = 0 and phi(v0) = 1")
    phi = np.zeros(len(even))
    phi[jj] = pe / alpha
    if kk:
        rhs = -(d[jj].T @ phi[jj])
        sol = np.linalg.lstsq(d[kk].T, rhs, rcond=None)[0]
        phi[kk] = sol
    if np.linalg.norm(phi @ d) > 1e-8 * max(1.0, np.linalg.norm(phi)):
        raise ArithmeticError("failed to complete phi on K")
    return phi


def dependent_vector(t: RootedBipTree, K, signs=None) -> np.ndarray:
    """Nonzero phi supported on K with phi^T D = 0, for K with m(K, T) = 0."""
    K = sorted(set(int(x) for x in K))
    d, even, _ = tree_incidence(t, signs)
    pos = {v: i for i, v in enumerate(even)}
    kk = [pos[v] for v in K]
    null = scipy.linalg.null_space(d[kk].T)
    if null.shape[1] == 0:
        raise ValueError("rows of K are independent, so m(K, T) > 0")
    phi = np.zeros(len(even))
    vec = null[:, 0]
    vec = vec / vec[np.flatnonzero(np.abs(vec) > 1e-12)[0]]
    phi[kk] = vec
    return phi


def uniform_transversal(t: RootedBipTree, rng: np.random.Generator, signs=None) -> frozenset:
    """Uniform transversal of t, drawn from the determinantal measure of im(D)."""
    from . import dpp

    d, even, _ = tree_incidence(t, signs)
    if matching_count(t) == 0:
        raise ValueError("tree has no transversal")
    if d.shape[1] == 0:
        return frozenset()
    h = Subspace.from_spanning(d.T, ambient_dim=len(even))
    s = dpp.sample(h, rng)
    return frozenset(even[i] for i in s.members)


def _multisets(items, max_total, count=None, limit=None):
    """Multisets of (code, size) items, as (codes, total size), with total <= max_total.

    ``count`` fixes the multiset cardinality; otherwise any cardinality.
    Raises RuntimeError once more than ``limit`` multisets are produced.
    """
    out = []

    def rec(start, remaining, chosen, total):
        if count is None or len(chosen) == count:
            out.append((tuple(chosen), total))
            if limit is not None and len(out) > limit:
                raise RuntimeError("tree enumeration exceeded its budget")
            if count is not None:
                return
        for i in range(start, len(items)):
            code, size = items[i]
            if size > remaining:
                continue
            chosen.append(code)
            rec(i, remaining - size, chosen, total + size)
            chosen.pop()

    rec(0, max_total, [], 0)
    return out


def enumerate_valid_trees(k: int, radius: int, max_vertices: int,
                          budget: int = 100_000) -> list[RootedBipTree]:
    """All valid trees of height exactly ``radius`` with at most ``max_vertices`` vertices."""
    if radius < 0 or radius % 2:
        raise ValueError("radius must be a non-negative even integer")
    if k < 1:
        raise ValueError("k must be >= 1")
    counter = [0]

    def bump(n):
        counter[0] += n
        if counter[0] > budget:
            raise RuntimeError(f"tree enumeration exceeded budget {budget}")

    memo: dict = {}

    def even_trees(rho, cap):
        # even-rooted trees of height <= rho and size <= cap, as (code, size)
        key = ("e", rho, cap)
        if key in memo:
            return memo[key]
        if cap < 1:
            res = []
        elif rho == 0:
            res = [(b"()", 1)]
        else:
            odd = odd_trees(rho - 1, cap - 1)
            res = [(b"(" + b"".join(sorted(codes)) + b")", 1 + tot)
                   for codes, tot in _multisets(odd, cap - 1, limit=budget - counter[0])]
        bump(len(res))
        memo[key] = res
        return res

    def odd_trees(rho, cap):
        key = ("o", rho, cap)
        if key in memo:
            return memo[key]
        evens = even_trees(rho - 1, cap - 1)
        res = [(b"(" + b"".join(sorted(codes)) + b")", 1 + tot)
               for codes, tot in _multisets(evens, cap - 1, count=k, limit=budget - counter[0])]
        bump(len(res))
        memo[key] = res
        return res

    trees = [RootedBipTree.from_code(c) for c, _ in even_trees(radius, max_vertices)]
    return [t for t in trees if t.height == radius]
