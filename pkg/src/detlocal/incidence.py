"""Signed bipartite incidence structures G = (V, U, E).

Every generator returns a :class:`SignedBipartiteIncidence` in which each
left vertex (V) has degree ``d`` and each right vertex (U) has degree
``k + 1``, with no two left vertices sharing two right neighbours.
The signed adjacency matrix B is |V| x |U|.
"""

from __future__ import annotations

import csv
import itertools
import json
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from . import _gf

FAMILIES = ("ust", "kalai", "cube", "colorful", "grassmannian", "subset", "custom")


class RankDropWarning(UserWarning):
    """Grassmannian parameters outside the range where B has full row rank."""


@dataclass(frozen=True, eq=False)
class SignedBipartiteIncidence:
    v_labels: tuple[str, ...]
    u_labels: tuple[str, ...]
    edge_v: np.ndarray
    edge_u: np.ndarray
    edge_sign: np.ndarray
    d: int
    k: int
    family: str = "custom"
    params: dict = field(default_factory=dict)

    @classmethod
    def from_edges(cls, n_v: int, n_u: int, edges: Iterable[Sequence[int]], d: int, k: int,
                   family: str = "custom", params: dict | None = None,
                   v_labels=None, u_labels=None) -> "SignedBipartiteIncidence":
        arr = np.asarray(list(edges), dtype=np.int64).reshape(-1, 3)
        if arr.size and (np.any(arr[:, 0] < 0) or np.any(arr[:, 0] >= n_v)
                         or np.any(arr[:, 1] < 0) or np.any(arr[:, 1] >= n_u)):
            raise ValueError("edge endpoint out of range")
        if arr.size and not np.all(np.abs(arr[:, 2]) == 1):
            raise ValueError("edge signs must be +1 or -1")
        v_labels = tuple(v_labels) if v_labels is not None else tuple(str(i) for i in range(n_v))
        u_labels = tuple(u_labels) if u_labels is not None else tuple(str(i) for i in range(n_u))
        if len(v_labels) != n_v or len(u_labels) != n_u:
            raise ValueError("label count does not match vertex count")
        return cls(v_labels, u_labels, arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy(),
                   int(d), int(k), family, dict(params or {}))

    @property
    def n(self) -> int:
        return len(self.v_labels)

    @property
    def m(self) -> int:
        return len(self.u_labels)

    @property
    def edges(self) -> list[tuple[int, int, int]]:
        return list(zip(self.edge_v.tolist(), self.edge_u.tolist(), self.edge_sign.tolist()))

    @cached_property
    def sparse(self) -> sp.csr_matrix:
        """B as a CSR matrix (duplicate edges are summed, so validate first)."""
        return sp.csr_matrix((self.edge_sign.astype(float), (self.edge_v, self.edge_u)),
                             shape=(self.n, self.m))

    @cached_property
    def sparse_t(self) -> sp.csr_matrix:
        return self.sparse.T.tocsr()

    @cached_property
    def v_adj(self) -> list[np.ndarray]:
        order = np.lexsort((self.edge_u, self.edge_v))
        counts = np.bincount(self.edge_v, minlength=self.n)
        return np.split(self.edge_u[order], np.cumsum(counts)[:-1])

    @cached_property
    def u_adj(self) -> list[np.ndarray]:
        order = np.lexsort((self.edge_v, self.edge_u))
        counts = np.bincount(self.edge_u, minlength=self.m)
        return np.split(self.edge_v[order], np.cumsum(counts)[:-1])

    @cached_property
    def u_adj_sign(self) -> list[np.ndarray]:
        """Edge signs aligned with :attr:`u_adj`."""
        order = np.lexsort((self.edge_v, self.edge_u))
        counts = np.bincount(self.edge_u, minlength=self.m)
        return np.split(self.edge_sign[order], np.cumsum(counts)[:-1])

    @cached_property
    def u_nbrs(self) -> np.ndarray | None:
        """(m, k+1) array of right-vertex neighbourhoods if every right degree is k+1."""
        if self.m == 0 or np.any(np.bincount(self.edge_u, minlength=self.m) != self.k + 1):
            return None
        return np.stack(self.u_adj) if self.m else None

    def sign(self, v: int, u: int) -> int:
        hit = np.nonzero((self.edge_v == v) & (self.edge_u == u))[0]
        return int(self.edge_sign[hit[0]]) if hit.size else 0

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "params": self.params,
            "d": self.d,
            "k": self.k,
            "v_labels": list(self.v_labels),
            "u_labels": list(self.u_labels),
            "edges": [list(e) for e in self.edges],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SignedBipartiteIncidence":
        return cls.from_edges(len(doc["v_labels"]), len(doc["u_labels"]), doc["edges"],
                              doc["d"], doc["k"], doc.get("family", "custom"),
                              doc.get("params", {}), doc["v_labels"], doc["u_labels"])


@dataclass(frozen=True)
class ValidationReport:
    simple: bool
    left_regular: bool
    right_regular: bool
    c4_free: bool
    degree_values: tuple[tuple[int, ...], tuple[int, ...]]
    count_identity: bool

    @property
    def ok(self) -> bool:
        return (self.simple and self.left_regular and self.right_regular
                and self.c4_free and self.count_identity)


def validate(g: SignedBipartiteIncidence) -> ValidationReport:
    """Check simplicity, (d, k+1)-bi-regularity and C4-freeness exhaustively.

    C4-freeness is checked by listing, for every right vertex, all pairs of
    its neighbours; a repeated pair is a 4-cycle. Cost is sum_u deg(u)^2.
    """
    key = g.edge_v * max(g.m, 1) + g.edge_u
    simple = np.unique(key).size == key.size
    ldeg = np.bincount(g.edge_v, minlength=g.n)
    rdeg = np.bincount(g.edge_u, minlength=g.m)
    left_regular = bool(np.all(ldeg == g.d))
    right_regular = bool(np.all(rdeg == g.k + 1))

    pair_keys = []
    for deg in np.unique(rdeg):
        if deg < 2:
            continue
        us = np.nonzero(rdeg == deg)[0]
        nb = np.stack([g.u_adj[u] for u in us])
        ia, ib = np.triu_indices(int(deg), 1)
        a, b = nb[:, ia], nb[:, ib]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        pair_keys.append((lo * g.n + hi).ravel())
    if pair_keys:
        allk = np.concatenate(pair_keys)
        c4_free = np.unique(allk).size == allk.size
    else:
        c4_free = True
    return ValidationReport(
        simple=bool(simple),
        left_regular=left_regular,
        right_regular=right_regular,
        c4_free=bool(c4_free),
        degree_values=(tuple(np.unique(ldeg).tolist()), tuple(np.unique(rdeg).tolist())),
        count_identity=g.m * (g.k + 1) == g.n * g.d,
    )


def signed_matrix(g: SignedBipartiteIncidence) -> np.ndarray:
    """Dense |V| x |U| matrix with entries in {-1, 0, +1}."""
    return g.sparse.toarray()


def write_matrix_csv(g: SignedBipartiteIncidence, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in signed_matrix(g).astype(int):
            w.writerow(row.tolist())


def _set_label(s) -> str:
    return "{" + ",".join(str(x) for x in s) + "}"


def _simplicial(vsets, usets, signed: bool):
    """Face-to-coface incidence; sign (-1)^i where i is the position of the dropped element."""
    vindex = {s: i for i, s in enumerate(vsets)}
    edges = []
    for ui, tau in enumerate(usets):
        for pos in range(len(tau)):
            sigma = tau[:pos] + tau[pos + 1:]
            sgn = (-1) ** pos if signed else 1
            edges.append((vindex[sigma], ui, sgn))
    return edges


def build_complete_graph_ust(n_vertices: int) -> SignedBipartiteIncidence:
    """Oriented vertex-edge incidence of K_n; each edge points from lower to higher label."""
    n = int(n_vertices)
    if n < 3:
        raise ValueError("need n_vertices >= 3")
    pairs = list(itertools.combinations(range(n), 2))
    edges = []
    for ui, (a, b) in enumerate(pairs):
        edges.append((a, ui, -1))
        edges.append((b, ui, 1))
    return SignedBipartiteIncidence.from_edges(
        n, len(pairs), edges, d=n - 1, k=1, family="ust", params={"n": n},
        v_labels=[str(i) for i in range(n)], u_labels=[_set_label(p) for p in pairs])


def build_kalai_complex(n_vertices: int, k: int) -> SignedBipartiteIncidence:
    """k-dimensional boundary operator of the complete simplicial complex on [n]."""
    n, k = int(n_vertices), int(k)
    if k < 1:
        raise ValueError("need k >= 1")
    if n < k + 2:
        raise ValueError("need n_vertices >= k + 2")
    vsets = list(itertools.combinations(range(n), k))
    usets = list(itertools.combinations(range(n), k + 1))
    return SignedBipartiteIncidence.from_edges(
        len(vsets), len(usets), _simplicial(vsets, usets, True), d=n - k, k=k,
        family="kalai", params={"n": n, "k": k},
        v_labels=[_set_label(s) for s in vsets], u_labels=[_set_label(s) for s in usets])


def _cube_cells(n: int, dim: int) -> list[str]:
    cells = []
    for free in itertools.combinations(range(n), dim):
        fixed = [i for i in range(n) if i not in free]
        for bits in itertools.product("01", repeat=len(fixed)):
            c = ["*"] * n
            for i, b in zip(fixed, bits):
                c[i] = b
            cells.append("".join(c))
    return cells


def build_hypercube_skeleton(n_dim: int, ell: int) -> SignedBipartiteIncidence:
    """(ell-1)-cells versus ell-cells of the n-cube with cubical boundary signs."""
    n, ell = int(n_dim), int(ell)
    if ell < 1 or ell > n:
        raise ValueError("need 1 <= ell <= n_dim")
    vcells = _cube_cells(n, ell - 1)
    ucells = _cube_cells(n, ell)
    vindex = {c: i for i, c in enumerate(vcells)}
    edges = []
    for ui, c in enumerate(ucells):
        free = [i for i, ch in enumerate(c) if ch == "*"]
        for j, coord in enumerate(free):
            s = (-1) ** j
            for bit, sgn in (("0", s), ("1", -s)):
                face = c[:coord] + bit + c[coord + 1:]
                edges.append((vindex[face], ui, sgn))
    return SignedBipartiteIncidence.from_edges(
        len(vcells), len(ucells), edges, d=n - ell + 1, k=2 * ell - 1, family="cube",
        params={"n_dim": n, "ell": ell}, v_labels=vcells, u_labels=ucells)


def build_colorful_complex(parts: int, part_size: int, ell: int) -> SignedBipartiteIncidence:
    """Rainbow ell-faces versus rainbow (ell+1)-faces of the complete balanced r-partite complex."""
    parts, part_size, ell = int(parts), int(part_size), int(ell)
    if ell < 1:
        raise ValueError("need ell >= 1")
    if part_size < 1:
        raise ValueError("need part_size >= 1")
    if parts <= ell:
        raise ValueError("need parts >= ell + 1")

    def rainbow(size):
        out = []
        for colors in itertools.combinations(range(parts), size):
            for picks in itertools.product(range(part_size), repeat=size):
                out.append(tuple(c * part_size + p for c, p in zip(colors, picks)))
        out.sort()
        return out

    vsets, usets = rainbow(ell), rainbow(ell + 1)
    name = lambda s: "{" + ",".join(f"{x // part_size}.{x % part_size}" for x in s) + "}"
    return SignedBipartiteIncidence.from_edges(
        len(vsets), len(usets), _simplicial(vsets, usets, True),
        d=(parts - ell) * part_size, k=ell, family="colorful",
        params={"parts": parts, "part_size": part_size, "ell": ell},
        v_labels=[name(s) for s in vsets], u_labels=[name(s) for s in usets])


def build_grassmannian(q: int, n_dim: int, ell: int) -> SignedBipartiteIncidence:
    """Containment of ell-dimensional in (ell+1)-dimensional subspaces of GF(q)^n, all signs +1.

    Outside ``ell + 1 < n_dim / 2`` the matrix may lose full row rank; a
    :class:`RankDropWarning` is emitted and the structure is still built.
    """
    q, n, ell = int(q), int(n_dim), int(ell)
    if not _gf.is_prime_power(q):
        raise ValueError(f"q={q} is not a prime power")
    if ell < 1 or ell + 1 > n:
        raise ValueError("need 1 <= ell and ell + 1 <= n_dim")
    if not 2 * (ell + 1) < n:
        warnings.warn(f"ell+1 < n/2 fails for (n={n}, ell={ell}); B may not have full row rank",
                      RankDropWarning, stacklevel=2)
    if _gf.gaussian_binomial(n, ell + 1, q) > 200_000:
        raise ValueError("Grassmannian too large for dense enumeration")
    f = _gf.field(q)
    vspaces = _gf.rref_subspaces(f, n, ell)
    uspaces = _gf.rref_subspaces(f, n, ell + 1)
    vindex = {s: i for i, s in enumerate(vspaces)}
    # ell-subspaces of GF(q)^(ell+1), pushed forward through each u's basis
    local = _gf.rref_subspaces(f, ell + 1, ell)
    edges = []
    for ui, ub in enumerate(uspaces):
        for sub in local:
            rows = [f.combine(coeffs, ub) for coeffs in sub]
            edges.append((vindex[f.rref(rows)], ui, 1))
    label = lambda s: json.dumps([list(r) for r in s], separators=(",", ":"))
    return SignedBipartiteIncidence.from_edges(
        len(vspaces), len(uspaces), edges, d=(q ** (n - ell) - 1) // (q - 1),
        k=_gf.gaussian_binomial(ell + 1, ell, q) - 1, family="grassmannian",
        params={"q": q, "n_dim": n, "ell": ell},
        v_labels=[label(s) for s in vspaces], u_labels=[label(s) for s in uspaces])


def build_subset_incidence(n_ground: int, l: int) -> SignedBipartiteIncidence:
    """Unsigned inclusion of l-subsets in (l+1)-subsets of [n]."""
    n, l = int(n_ground), int(l)
    if l < 1 or l > n - 1:
        raise ValueError("need 1 <= l <= n_ground - 1")
    vsets = list(itertools.combinations(range(n), l))
    usets = list(itertools.combinations(range(n), l + 1))
    return SignedBipartiteIncidence.from_edges(
        len(vsets), len(usets), _simplicial(vsets, usets, False), d=n - l, k=l,
        family="subset", params={"n_ground": n, "l": l},
        v_labels=[_set_label(s) for s in vsets], u_labels=[_set_label(s) for s in usets])


_BUILDERS = {
    "ust": (build_complete_graph_ust, ("n",)),
    "kalai": (build_kalai_complex, ("n", "k")),
    "cube": (build_hypercube_skeleton, ("n_dim", "ell")),
    "colorful": (build_colorful_complex, ("parts", "part_size", "ell")),
    "grassmannian": (build_grassmannian, ("q", "n_dim", "ell")),
    "subset": (build_subset_incidence, ("n_ground", "l")),
}

# the parameter that a size ladder varies, per family
SIZE_PARAM = {"ust": "n", "kalai": "n", "cube": "n_dim", "colorful": "part_size",
              "grassmannian": "n_dim", "subset": "n_ground"}


def build(family: str, **params) -> SignedBipartiteIncidence:
    """Dispatch to a generator by family name with keyword parameters."""
    try:
        fn, names = _BUILDERS[family]
    except KeyError:
        raise ValueError(f"unknown family {family!r}") from None
    missing = [p for p in names if p not in params]
    extra = [p for p in params if p not in names]
    if missing or extra:
        raise ValueError(f"family {family!r} takes parameters {names}; got {sorted(params)}")
    return fn(*(int(params[p]) for p in names))
