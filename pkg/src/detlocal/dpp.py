"""Projection determinantal measures: exact sampling, masses, marginals, conditioning.

For a subspace H of R^m with orthogonal projection P, the measure on
dim(H)-subsets T of [m] is P^H(T) = det(P restricted to T), and the
marginals are P^H(E in T) = det(P restricted to E).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .incidence import SignedBipartiteIncidence
from .spectral import NumericalError, Subspace, positive_spectrum_plus

CLAMP_BAND = 1e-8
REORTHO_EVERY = 64
ENUMERATION_LIMIT = 10**6


class EnumerationLimitError(RuntimeError):
    """Brute-force enumeration would exceed ENUMERATION_LIMIT subsets."""


@dataclass(frozen=True)
class SampleSet:
    members: tuple[int, ...]
    source_dim: int

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(sorted(int(x) for x in self.members)))

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def mask(self, m: int) -> np.ndarray:
        out = np.zeros(m, dtype=bool)
        out[list(self.members)] = True
        return out


def _clamp(p: float) -> float:
    if p < -CLAMP_BAND or p > 1 + CLAMP_BAND:
        raise NumericalError(f"conditional probability {p!r} left [0, 1] beyond the clamp band")
    return min(max(p, 0.0), 1.0)


def _drop_direction(q: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Rows spanning {x in rowspan(q) : x_u = 0}, where a = q[:, u] != 0.

    A Householder reflector sends a to a multiple of e_0; the remaining
    reflected rows are orthogonal to a, hence vanish at coordinate u.
    """
    v = a.copy()
    alpha = np.linalg.norm(a)
    v[0] += math.copysign(alpha, a[0] if a[0] != 0 else 1.0)
    vv = v @ v
    if vv == 0.0:
        return q[1:].copy()
    q = q - np.outer(v, (2.0 / vv) * (v @ q))
    return q[1:]


def _exclude_coordinate(q: np.ndarray, a: np.ndarray, u: int, p: float) -> np.ndarray:
    """Project rowspan(q) onto e_u^perp and restore orthonormality with a rank-one fix."""
    q[:, u] = 0.0
    s = math.sqrt(1.0 - p)
    if s == 0.0:
        raise NumericalError(f"excluded a coordinate of marginal 1 (p={p!r})")
    beta = 1.0 / (s * (1.0 + s))
    q += np.outer(beta * a, a @ q)
    return q


def sample(h: Subspace, rng: np.random.Generator) -> SampleSet:
    """Exact sample of P^H by sequential conditioning in coordinate order.

    Coordinate u is included with the probability P(u, u) of the current
    conditioned projection. Inclusion restricts the basis to vectors vanishing
    at u; exclusion zeroes coordinate u and re-orthonormalizes. The basis is
    re-orthonormalized by QR every ``REORTHO_EVERY`` steps.
    """
    if h.dim < 1:
        raise ValueError("subspace must have dimension >= 1")
    q = h.basis.copy()
    members = []
    for step, u in enumerate(range(h.ambient_dim), start=1):
        if q.shape[0] == 0:
            break
        a = q[:, u].copy()
        p = _clamp(float(a @ a))
        if rng.random() < p:
            members.append(u)
            q = _drop_direction(q, a)
        else:
            q = _exclude_coordinate(q, a, u, p)
        if step % REORTHO_EVERY == 0 and q.shape[0]:
            q = np.linalg.qr(q.T)[0].T
    if len(members) != h.dim:
        raise NumericalError(f"sampler returned {len(members)} elements, expected {h.dim}")
    return SampleSet(tuple(members), h.dim)


def mass(h: Subspace, t) -> float:
    """P^H(T) = det(P restricted to T), computed as det(Q[:, T])^2."""
    t = sorted(int(x) for x in t)
    if len(t) != h.dim:
        raise ValueError(f"|T|={len(t)} does not match dim(H)={h.dim}")
    if not t:
        return 1.0
    return float(np.linalg.det(h.basis[:, t]) ** 2)


def marginal(h: Subspace, e) -> float:
    """P^H(E subset of T) = det(P restricted to E)."""
    e = sorted(set(int(x) for x in e))
    if not e:
        return 1.0
    sub = h.basis[:, e]
    return float(np.linalg.det(sub.T @ sub))


def condition(h: Subspace, include=(), exclude=()) -> Subspace:
    """Subspace whose measure is P^H conditioned on include in T and exclude disjoint from T.

    Equals ((H cap [A]^perp) + [A] + [B]) cap [B]^perp for A = include, B = exclude.
    """
    a = sorted(set(int(x) for x in include))
    b = sorted(set(int(x) for x in exclude))
    if set(a) & set(b):
        raise ValueError("include and exclude must be disjoint")
    q = h.basis
    if a:
        null = scipy.linalg.null_space(q[:, a].T)
        rows = null.T @ q
    else:
        rows = q.copy()
    rows = rows.copy()
    rows[:, b] = 0.0
    units = np.zeros((len(a), h.ambient_dim))
    units[np.arange(len(a)), a] = 1.0
    return Subspace.from_spanning(np.vstack([rows, units]), ambient_dim=h.ambient_dim)


def enumerate_all(h: Subspace, min_mass: float = 1e-12) -> list[tuple[SampleSet, float]]:
    """All dim(H)-subsets with positive mass (brute force)."""
    m, r = h.ambient_dim, h.dim
    if math.comb(m, r) > ENUMERATION_LIMIT:
        raise EnumerationLimitError(f"C({m},{r}) subsets exceeds the enumeration limit {ENUMERATION_LIMIT}")
    out = []
    total = 0.0
    combos = itertools.combinations(range(m), r)
    while True:
        chunk = list(itertools.islice(combos, 20000))
        if not chunk:
            break
        idx = np.asarray(chunk, dtype=np.int64).reshape(len(chunk), r)
        if r:
            mats = h.basis[:, idx].transpose(1, 0, 2)
            masses = np.linalg.det(mats) ** 2
        else:
            masses = np.ones(len(chunk))
        total += float(masses.sum())
        for t, w in zip(chunk, masses):
            if w > min_mass:
                out.append((SampleSet(t, r), float(w)))
    if abs(total - 1.0) > 1e-8:
        raise NumericalError(f"masses sum to {total!r}, not 1")
    return out


def _check_in_subspace(h: Subspace, xis: np.ndarray, tol: float = 1e-8) -> None:
    for x in xis:
        err = np.linalg.norm(x - h.project(x))
        if err > tol * max(1.0, np.linalg.norm(x)):
            raise ValueError(f"vector not in subspace (residual {err:.2e})")


def _admissible(h: Subspace, u: int, xis) -> np.ndarray:
    x = np.atleast_2d(np.asarray(xis, dtype=float))
    if x.shape[1] != h.ambient_dim:
        raise ValueError("vector length does not match the ambient dimension")
    _check_in_subspace(h, x)
    vals = x[:, u]
    if np.any(np.abs(np.abs(vals) - 1.0) > 1e-8):
        raise ValueError("every xi must satisfy |xi(u)| = 1")
    return x * np.sign(vals)[:, None]


def nw_lower_bound(h: Subspace, u: int, xis) -> float:
    """Determinantal Nash-Williams bound: sum of the entries of the inverse Gram matrix.

    Each xi lies in H with |xi(u)| = 1; the result never exceeds P^H(u in T).
    """
    x = _admissible(h, u, xis)
    gram = x @ x.T
    if np.linalg.cond(gram) > 1e10:
        raise ValueError("Gram matrix is singular or too ill-conditioned")
    ones = np.ones(len(x))
    return float(ones @ np.linalg.solve(gram, ones))


def nw_corollary_bound(h: Subspace, u: int, xis, gamma: float) -> float:
    """(1 - gamma k / (1 - gamma k)) * sum 1/|xi|^2 for nearly orthogonal xi."""
    x = _admissible(h, u, xis)
    k = len(x)
    if not 0 < gamma < 1 / k:
        raise ValueError("gamma must lie in (0, 1/k)")
    gram = x @ x.T
    sq = np.diag(gram)
    lim = gamma * np.minimum.outer(sq, sq)
    off = ~np.eye(k, dtype=bool)
    if np.any(np.abs(gram[off]) > lim[off] * (1 + 1e-12)):
        raise ValueError("pairwise inner products exceed gamma * min squared norm")
    return float((1 - gamma * k / (1 - gamma * k)) * np.sum(1.0 / sq))


class IncidenceSampler:
    """Exact sampler for the row space of an incidence matrix B.

    Works in R^V with the inner product given by A = (B B^T)^+, so the
    projection onto the row space is P = B^T A B and is never formed.
    Elements are drawn by the chain rule: the next element is u with
    probability proportional to its residual squared norm after removing
    the span of the elements already drawn. Draws are proposed from the
    initial marginals P(u, u) and accepted with probability residual / P(u, u),
    so each step touches only the k+1 nonzeros of column u.
    """

    def __init__(self, g: SignedBipartiteIncidence):
        self.g = g
        lam, w = positive_spectrum_plus(g)
        self.rank = len(lam)
        self.A = (w / (g.d * lam)) @ w.T
        bt = g.sparse_t
        self._indptr, self._indices, self._data = bt.indptr, bt.indices, bt.data
        p = np.empty(g.m)
        for lo in range(0, g.m, 20000):
            blk = bt[lo:lo + 20000]
            p[lo:lo + 20000] = np.asarray(blk.multiply(blk @ self.A).sum(axis=1)).ravel()
        self.marginals = p
        self._cdf = np.cumsum(p)

    def sample(self, rng: np.random.Generator) -> SampleSet:
        n, r = self.g.n, self.rank
        p, cdf, total = self.marginals, self._cdf, self._cdf[-1]
        ip, ix, dat = self._indptr, self._indices, self._data
        z = np.empty((n, r))
        chosen = np.zeros(self.g.m, dtype=bool)
        out = []
        for j in range(r):
            while True:
                u = int(np.searchsorted(cdf, rng.random() * total, side="right"))
                if u >= len(p) or chosen[u] or p[u] <= 0:
                    continue
                nb, sg = ix[ip[u]:ip[u + 1]], dat[ip[u]:ip[u + 1]]
                c = sg @ z[nb, :j]
                res = p[u] - c @ c
                if rng.random() * p[u] < res:
                    break
            z[:, j] = (self.A[:, nb] @ sg - z[:, :j] @ c) / math.sqrt(res)
            chosen[u] = True
            out.append(u)
        return SampleSet(tuple(out), r)
