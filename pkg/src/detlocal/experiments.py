"""Balls of G[T] around random roots, their empirical laws, and convergence runs."""

from __future__ import annotations

import csv
import io
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import dpp
from .incidence import SIZE_PARAM, SignedBipartiteIncidence, build
from .limit import BallDistribution, tk_distribution
from .rootedtrees import RootedBipTree, matching_count, parts
from .spectral import SpectralData, default_eps_delta, structured_vertices, structured_vertices_from_graph


class NonTree:
    """Marker for a ball of G[T] that contains a cycle."""

    def __init__(self, u_hosts=()):
        self.u_hosts = tuple(u_hosts)

    def __repr__(self):
        return "NonTree()"


NON_TREE = NonTree()


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent PCG64 stream for (seed, key); identical across thread counts."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def extract_ball(g: SignedBipartiteIncidence, t, o: int, radius: int, in_t: np.ndarray | None = None):
    """Radius-``radius`` ball around v-index ``o`` in G[T].

    Returns a RootedBipTree whose ``host`` maps vertices back to g (v-indices at
    even depth, u-indices at odd depth), or a :class:`NonTree` if the ball
    contains a cycle.
    """
    if in_t is None:
        in_t = t.mask(g.m) if isinstance(t, dpp.SampleSet) else _mask(t, g.m)
    parent, host, sign = [-1], [int(o)], [0]
    depth = [0]
    seen_v, seen_u = {int(o): 0}, {}
    frontier = [0]
    for dist in range(1, radius + 1):
        nxt = []
        for idx in frontier:
            if depth[idx] % 2 == 0:
                nb = g.v_adj[host[idx]]
                for u in nb[in_t[nb]].tolist():
                    if u in seen_u:
                        continue
                    seen_u[u] = len(parent)
                    parent.append(idx)
                    host.append(u)
                    sign.append(0)
                    depth.append(dist)
                    nxt.append(len(parent) - 1)
            else:
                u = host[idx]
                for v, s in zip(g.u_adj[u].tolist(), g.u_adj_sign[u].tolist()):
                    if v in seen_v:
                        continue
                    seen_v[v] = len(parent)
                    parent.append(idx)
                    host.append(v)
                    sign.append(s)
                    depth.append(dist)
                    nxt.append(len(parent) - 1)
        frontier = nxt
    # edges of G[T] inside the ball; the ball is a tree iff there are |ball| - 1 of them
    n_edges = sum(sum(1 for v in g.u_adj[u].tolist() if v in seen_v) for u in seen_u)
    if n_edges != len(parent) - 1:
        return NonTree(seen_u)
    # odd vertices carry the sign of the edge to their (even) parent
    for u, idx in seen_u.items():
        pv = host[parent[idx]]
        sign[idx] = int(g.u_adj_sign[u][np.searchsorted(g.u_adj[u], pv)])
    return RootedBipTree(tuple(parent), tuple(host), tuple(sign))


def _mask(t, m):
    out = np.zeros(m, dtype=bool)
    out[list(t)] = True
    return out


def tv_distance(a: BallDistribution, b: BallDistribution) -> float:
    """Half the L1 distance over the union of codes plus the residual buckets."""
    if a.radius != b.radius:
        raise ValueError("distributions have different radii")
    keys = set(a.entries) | set(b.entries)
    s = sum(abs(a.get(c) - b.get(c)) for c in keys)
    return 0.5 * (s + abs(a.residual - b.residual))


def _bucket(ball, radius):
    if isinstance(ball, NonTree):
        return "nontree"
    if ball.height != radius:
        return "short"
    return ball.code


def _make_sampler(g, sampler):
    if sampler is None or sampler == "incidence":
        return dpp.IncidenceSampler(g).sample
    if sampler == "sequential":
        from .spectral import decompose, projection_subspace
        h = projection_subspace(decompose(g))
        return lambda rng: dpp.sample(h, rng)
    return sampler


@dataclass
class _Tally:
    counts: Counter = field(default_factory=Counter)
    nontree: int = 0
    short: int = 0
    structured_hits: int = 0
    observations: int = 0

    def add(self, other: "_Tally") -> "_Tally":
        self.counts.update(other.counts)
        self.nontree += other.nontree
        self.short += other.short
        self.structured_hits += other.structured_hits
        self.observations += other.observations
        return self

    def distribution(self, radius, k) -> BallDistribution:
        dist = BallDistribution.from_counts(dict(self.counts), self.nontree + self.short, radius, k)
        dist.meta.update(nontree=self.nontree, short=self.short)
        return dist


def _tally_sample(g, sample, radius, roots, structured_mask=None) -> _Tally:
    tally = _Tally()
    in_t = sample.mask(g.m)
    for o in roots:
        ball = extract_ball(g, sample, int(o), radius, in_t)
        b = _bucket(ball, radius)
        if b == "nontree":
            tally.nontree += 1
        elif b == "short":
            tally.short += 1
        else:
            tally.counts[b] += 1
        if structured_mask is not None:
            hosts = ball.u_hosts if isinstance(ball, NonTree) else \
                [h for v, h in enumerate(ball.host) if not ball.is_even(v)]
            if any(structured_mask[u] for u in hosts):
                tally.structured_hits += 1
        tally.observations += 1
    return tally


def empirical_ball_distribution(g: SignedBipartiteIncidence, radius: int, num_samples: int,
                                roots_per_sample: int | None, rng: np.random.Generator,
                                sampler=None) -> BallDistribution:
    """Law of the rooted ball over T ~ P^H and uniform roots.

    ``roots_per_sample=None`` scans every root of each sample. Cycles and balls
    of height below ``radius`` are counted in the residual.
    """
    if num_samples < 1 or (roots_per_sample is not None and roots_per_sample < 1):
        raise ValueError("need at least one sample and one root")
    draw = _make_sampler(g, sampler)
    tally = _Tally()
    for _ in range(num_samples):
        s = draw(rng)
        roots = np.arange(g.n) if roots_per_sample is None else rng.integers(0, g.n, roots_per_sample)
        tally.add(_tally_sample(g, s, radius, roots))
    return tally.distribution(radius, g.k)


def exact_ball_distribution(g: SignedBipartiteIncidence, radius: int, h=None) -> BallDistribution:
    """Exact mixture over every T with positive mass and every root (brute force)."""
    if h is None:
        from .spectral import decompose, projection_subspace
        h = projection_subspace(decompose(g))
    entries: Counter = Counter()
    residual = 0.0
    for s, w in dpp.enumerate_all(h):
        in_t = s.mask(g.m)
        for o in range(g.n):
            b = _bucket(extract_ball(g, s, o, radius, in_t), radius)
            if b in ("nontree", "short"):
                residual += w / g.n
            else:
                entries[b] += w / g.n
    return BallDistribution(dict(entries), residual, radius, g.k)


def quenched_fractions(g: SignedBipartiteIncidence, t0: RootedBipTree, radius: int,
                       num_samples: int, rng: np.random.Generator, sampler=None) -> np.ndarray:
    """Y/|V| per sample: the fraction of roots whose ball is isomorphic to t0."""
    if not t0.height == radius:
        raise ValueError("t0 must have height equal to the radius")
    from .rootedtrees import is_valid
    if not is_valid(t0, g.k):
        raise ValueError("t0 is not a valid tree for this k")
    draw = _make_sampler(g, sampler)
    target = t0.code
    out = np.empty(num_samples)
    for i in range(num_samples):
        s = draw(rng)
        tally = _tally_sample(g, s, radius, range(g.n))
        out[i] = tally.counts.get(target, 0) / g.n
    return out


def tree_determinant_identity_gap(g: SignedBipartiteIncidence, t: RootedBipTree,
                                  spectral: SpectralData | None = None) -> float:
    """|det(L- restricted to U(t)) - d^{-|U(t)|} m(empty, t)| for a tree embedded in g."""
    if t.host is None:
        raise ValueError("tree carries no embedding into g")
    even, odd, _ = parts(t)
    vhost = {t.host[v] for v in even}
    ch = t._raw_children
    for u in odd:
        tree_nbrs = sorted([t.host[t.parent[u]]] + [t.host[c] for c in ch[u]])
        if tree_nbrs != sorted(g.u_adj[t.host[u]].tolist()) or not set(tree_nbrs) <= vhost:
            raise ValueError(f"odd vertex {u} is not embedded with its full neighbourhood")
    S = [t.host[u] for u in odd]
    if spectral is not None:
        psi = spectral.eigenvectors[S][:, : spectral.rank]
        lsub = (psi * spectral.eigenvalues[: spectral.rank]) @ psi.T
    else:
        cols = g.sparse[:, S].toarray()
        lsub = cols.T @ cols / g.d
    det = float(np.linalg.det(lsub)) if S else 1.0
    return abs(det - g.d ** (-len(S)) * matching_count(t))


def structured_hit_fraction(g: SignedBipartiteIncidence, spectral: SpectralData | None,
                            eps: float | None, delta: float | None, balls) -> float:
    """Fraction of balls that contain an (eps, delta)-structured right vertex."""
    if spectral is not None:
        sset = structured_vertices(spectral, eps, delta)
    else:
        sset = structured_vertices_from_graph(g, eps, delta)
    mask = np.zeros(g.m, dtype=bool)
    mask[sset] = True
    balls = list(balls)
    if not balls:
        return 0.0
    hits = 0
    for b in balls:
        hosts = b.u_hosts if isinstance(b, NonTree) else \
            [h for v, h in enumerate(b.host) if not b.is_even(v)]
        hits += any(mask[u] for u in hosts)
    return hits / len(balls)


@dataclass
class SizeRow:
    size: int
    n: int
    m: int
    d: int
    samples: int
    root_samples: int
    tv_to_limit: float
    non_tree_fraction: float
    short_fraction: float
    structured_hit_fraction: float
    structured_count: int
    distribution: BallDistribution = field(repr=False)


@dataclass
class ConvergenceReport:
    family: str
    params: dict
    k: int
    radius: int
    sizes: list[int]
    rows: list[SizeRow]
    seed: int
    eps_delta: str = "d^-1/2, d^-5/4"
    limit_residual: float = 0.0

    @property
    def tv(self) -> list[float]:
        return [r.tv_to_limit for r in self.rows]

    def to_json(self) -> dict:
        rows = []
        for r in self.rows:
            d = asdict(r)
            d.pop("distribution")
            rows.append(d)
        return {"family": self.family, "params": self.params, "k": self.k, "radius": self.radius,
                "sizes": self.sizes, "seed": self.seed, "eps_delta": self.eps_delta,
                "limit_residual": self.limit_residual, "rows": rows}

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["size", "tv", "non_tree_fraction", "structured_fraction"])
        for r in self.rows:
            w.writerow([r.size, repr(r.tv_to_limit), repr(r.non_tree_fraction),
                        repr(r.structured_hit_fraction)])
        return buf.getvalue()


def limit_distribution(k: int, radius: int, target_residual: float = 1e-4,
                       max_vertices_cap: int = 60, budget: int = 10_000) -> BallDistribution:
    """Exact T_k ball law, growing the vertex limit until the residual is below target.

    Stops early once the trees enumerated over all steps exceed ``budget``;
    the residual then records how much mass is missing.
    """
    t = radius + 1
    best = tk_distribution(k, radius, t)
    spent = len(best.entries)
    while best.residual > target_residual and t < max_vertices_cap and spent < budget:
        t += 2
        best = tk_distribution(k, radius, t)
        spent += len(best.entries)
    return best


def convergence_experiment(family: str, params: dict, sizes, k: int, radius: int,
                           samples: int, roots: int | None, seed: int,
                           limit: BallDistribution | None = None, threads: int = 1,
                           eps: float | None = None, delta: float | None = None,
                           sampler=None) -> ConvergenceReport:
    """Empirical ball laws along a size ladder, each compared to the T_k law.

    Sample j at size index i uses the stream (seed, i, j), so the report does
    not depend on ``threads``.
    """
    if limit is None:
        limit = limit_distribution(k, radius)
    size_key = SIZE_PARAM[family]
    rows = []
    for i, size in enumerate(sizes):
        g = build(family, **{**params, size_key: size})
        if g.k != k:
            raise ValueError(f"{family} at size {size} has k={g.k}, expected {k}")
        draw = _make_sampler(g, sampler)
        e0, d0 = default_eps_delta(g.d)
        sset = structured_vertices_from_graph(g, eps if eps is not None else e0,
                                              delta if delta is not None else d0)
        smask = np.zeros(g.m, dtype=bool)
        smask[sset] = True

        def task(j, g=g, draw=draw, smask=smask, i=i):
            rng = stream(seed, i, j)
            s = draw(rng)
            rts = np.arange(g.n) if roots is None else rng.integers(0, g.n, roots)
            return _tally_sample(g, s, radius, rts, smask)

        tally = _Tally()
        if threads > 1:
            with ThreadPoolExecutor(threads) as ex:
                for part in ex.map(task, range(samples)):
                    tally.add(part)
        else:
            for j in range(samples):
                tally.add(task(j))
        dist = tally.distribution(radius, k)
        obs = tally.observations
        rows.append(SizeRow(size=size, n=g.n, m=g.m, d=g.d, samples=samples, root_samples=obs,
                            tv_to_limit=tv_distance(dist, limit),
                            non_tree_fraction=tally.nontree / obs, short_fraction=tally.short / obs,
                            structured_hit_fraction=tally.structured_hits / obs,
                            structured_count=int(len(sset)), distribution=dist))
    return ConvergenceReport(family, dict(params), k, radius, list(sizes), rows, seed,
                             limit_residual=limit.residual)
