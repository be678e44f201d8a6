"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``ACCEPTANCE n: PASS|FAIL`` line with its measured
numbers. Run with ``pytest tests/test_acceptance.py -v``.
"""

import math
import time
import warnings
from collections import Counter
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import (admissible_family, brute_matching_count, count_isomorphisms,
                      random_relabel, star_k, unlabeled_trees)
from detlocal import dpp
from detlocal.experiments import (NonTree, convergence_experiment, extract_ball,
                                  quenched_fractions, tree_determinant_identity_gap, tv_distance)
from detlocal.incidence import _BUILDERS, RankDropWarning, build
from detlocal.limit import (BallDistribution, sample_one_out_ball, sample_tk_ball, tk_ball_mass,
                            tk_distribution)
from detlocal.rootedtrees import (RootedBipTree, aut_size, matching_count, parts,
                                  tree_incidence, transversal_vector)
from detlocal.spectral import Subspace, decompose, projection_subspace, trace_identity_gap

pytestmark = pytest.mark.acceptance


@contextmanager
def criterion(capsys, n, limit_s=None):
    """Print one PASS/FAIL line for criterion n; ``info`` collects the measured values."""
    info = {}
    t0 = time.perf_counter()
    try:
        yield info
        elapsed = time.perf_counter() - t0
        info["seconds"] = round(elapsed, 1)
        if limit_s is not None:
            assert elapsed < limit_s, f"runtime {elapsed:.0f}s over {limit_s}s"
    except BaseException as e:
        info.setdefault("seconds", round(time.perf_counter() - t0, 1))
        with capsys.disabled():
            print(f"\nACCEPTANCE {n}: FAIL {_fmt(info)} :: {str(e).splitlines()[0] if str(e) else type(e).__name__}")
        raise
    with capsys.disabled():
        print(f"\nACCEPTANCE {n}: PASS {_fmt(info)}")


def _fmt(info):
    return " ".join(f"{k}={v}" for k, v in info.items())


def row_space(g):
    return projection_subspace(decompose(g))


def empirical(codes, radius, k):
    return BallDistribution.from_counts(Counter(codes), 0, radius, k)


def test_criterion_01_oracle_parity_k4(capsys):
    with criterion(capsys, 1, 30) as info:
        h = row_space(build("ust", n=4))
        pairs = dpp.enumerate_all(h)
        info["bases"] = len(pairs)
        assert len(pairs) == 16
        info["max_mass_err"] = f"{max(abs(w - 1 / 16) for _, w in pairs):.1e}"
        assert all(abs(w - 1 / 16) < 1e-9 for _, w in pairs)
        rng = np.random.default_rng(101)
        n = 100_000
        counts = Counter(dpp.sample(h, rng).members for _ in range(n))
        tv = 0.5 * sum(abs(counts.get(s.members, 0) / n - 1 / 16) for s, _ in pairs)
        tv += 0.5 * sum(c / n for t, c in counts.items() if t not in {s.members for s, _ in pairs})
        info["tv"] = round(tv, 4)
        assert tv <= 0.02


def test_criterion_02_kalai_quantization(capsys):
    with criterion(capsys, 2, 120) as info:
        pairs = dpp.enumerate_all(row_space(build("kalai", n=5, k=2)))
        total = sum(w for _, w in pairs)
        err = max(abs(w * 125 - round(w * 125)) / 125 for _, w in pairs)
        info.update(support=len(pairs), sum_err=f"{abs(total - 1):.1e}", quant_err=f"{err:.1e}")
        assert err < 1e-8
        assert abs(total - 1) < 1e-8


def _generator_grid(max_m=2000):
    """Every family over a parameter grid, keeping instances with at most max_m U-vertices."""
    grids = {
        "ust": [dict(n=n) for n in range(3, 64)],
        "kalai": [dict(n=n, k=k) for k in (1, 2, 3) for n in range(k + 3, 30)],
        "cube": [dict(n_dim=n, ell=e) for n in range(2, 9) for e in range(1, n)],
        "colorful": [dict(parts=p, part_size=s, ell=e) for p in (3, 4, 5) for s in (2, 3, 4, 5)
                     for e in range(1, p)],
        "grassmannian": [dict(q=q, n_dim=n, ell=e) for q in (2, 3) for n in range(3, 8)
                         for e in range(1, n - 1)],
        "subset": [dict(n_ground=n, l=l) for n in range(3, 13) for l in range(1, n - 1)],
    }
    assert set(grids) == set(_BUILDERS)
    for family, plist in grids.items():
        for params in plist:
            if _estimated_m(family, params) > max_m:
                continue
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RankDropWarning)
                    g = build(family, **params)
            except ValueError:
                continue
            if g.m <= max_m:
                yield family, params, g


def _gauss_binom(n, k, q):
    num = den = 1
    for i in range(k):
        num *= q ** (n - i) - 1
        den *= q ** (i + 1) - 1
    return num // den


def _estimated_m(family, p):
    # cheap size estimate so oversized instances are never built
    if family == "ust":
        return math.comb(p["n"], 2)
    if family == "kalai":
        return math.comb(p["n"] - 1, p["k"] + 1)
    if family == "cube":
        return math.comb(p["n_dim"], p["ell"] + 1) * 2 ** (p["n_dim"] - p["ell"] - 1)
    if family == "colorful":
        return math.comb(p["parts"], p["ell"] + 1) * p["part_size"] ** (p["ell"] + 1)
    if family == "grassmannian":
        return _gauss_binom(p["n_dim"], p["ell"] + 1, p["q"])
    return math.comb(p["n_ground"], p["l"] + 1)


def test_criterion_03_trace_identity(capsys):
    with criterion(capsys, 3) as info:
        worst, count, slowest = 0.0, 0, 0.0
        fams = Counter()
        for family, params, g in _generator_grid():
            t0 = time.perf_counter()
            ref = g.k * g.n / g.d
            rel = trace_identity_gap(g) / ref
            slowest = max(slowest, time.perf_counter() - t0)
            worst = max(worst, rel)
            count += 1
            fams[family] += 1
            assert rel < 1e-8, f"{family} {params}: relative gap {rel:.2e}"
        info.update(graphs=count, families=len(fams), worst_rel=f"{worst:.1e}",
                    slowest_s=round(slowest, 2))
        assert len(fams) == 6 and slowest < 60


def test_criterion_04_limit_normalization(capsys):
    with criterion(capsys, 4) as info:
        r12 = tk_distribution(1, 2, 41).residual
        r14 = tk_distribution(1, 4, 35).residual
        r22 = tk_distribution(2, 2, 31).residual
        info.update(res_1_2=f"{r12:.1e}", res_1_4=f"{r14:.1e}", res_2_2=f"{r22:.1e}")
        assert r12 < 1e-6 and r14 < 1e-3 and r22 < 1e-3
        worst = 0.0
        for k in range(1, 5):
            for c in range(1, 21):
                expected = math.exp(-k) * c * k ** (c - 1) / math.factorial(c)
                worst = max(worst, abs(tk_ball_mass(star_k(c, k), k) - expected))
        info["closed_form_err"] = f"{worst:.1e}"
        assert worst < 1e-12


def test_criterion_05_three_way_limit(capsys):
    with criterion(capsys, 5, 300) as info:
        n = 100_000
        for (k, r), t in zip([(1, 2), (1, 4), (2, 2)], (41, 39, 31)):
            exact = tk_distribution(k, r, t)
            rng_t = np.random.default_rng(500 + 10 * k + r)
            rng_o = np.random.default_rng(600 + 10 * k + r)
            tk = empirical((sample_tk_ball(k, r, rng_t).code for _ in range(n)), r, k)
            oo = empirical((sample_one_out_ball(k, 10_000, r, rng_o).code for _ in range(n)), r, k)
            tvs = (tv_distance(exact, tk), tv_distance(exact, oo), tv_distance(tk, oo))
            info[f"tv_{k}_{r}"] = "/".join(f"{x:.4f}" for x in tvs)
            assert max(tvs) <= 0.02, f"(k={k}, r={r}) pairwise TV {tvs}"


def _ladder(family, params, size_samples, k, limit, seed):
    """TV to the limit at each size, with samples chosen per size for about 1e5 root-samples."""
    tvs = []
    for size, samples in size_samples:
        rep = convergence_experiment(family, params, [size], k, 2, samples, None, seed, limit=limit)
        assert rep.rows[0].root_samples >= 100_000
        tvs.append(rep.tv[0])
    return tvs


def _strictly_decreasing(xs):
    return all(b < a for a, b in zip(xs, xs[1:]))


def test_criterion_06_main_theorem_desk_check(capsys):
    with criterion(capsys, 6, 1800) as info:
        limit1 = tk_distribution(1, 2, 41)
        limit2 = tk_distribution(2, 2, 41)
        ust = _ladder("ust", {}, [(50, 2000), (200, 500), (800, 125)], 1, limit1, 7)
        info["ust_tv"] = "/".join(f"{x:.4f}" for x in ust)
        kal = _ladder("kalai", {"k": 2}, [(8, 3572), (12, 1516), (16, 834)], 2, limit2, 8)
        info["kalai_tv"] = "/".join(f"{x:.4f}" for x in kal)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankDropWarning)
            gr = _ladder("grassmannian", {"q": 2, "ell": 1}, [(4, 6667), (5, 3226), (6, 1588)],
                         2, limit2, 9)
        info["grass_tv"] = "/".join(f"{x:.4f}" for x in gr)
        assert _strictly_decreasing(ust), f"UST TV not decreasing: {ust}"
        assert ust[-1] < 0.05
        assert _strictly_decreasing(kal), f"Kalai TV not decreasing: {kal}"
        assert _strictly_decreasing(gr), f"Grassmannian TV not decreasing: {gr}"


def _odd_vertices_inner(t):
    ch = t._raw_children
    return all(ch[v] for v in range(t.n) if not t.is_even(v))


def test_criterion_07_tree_oracles(capsys):
    with criterion(capsys, 7, 300) as info:
        rng = np.random.default_rng(707)
        checked = 0
        for n in range(1, 14):
            for p in unlabeled_trees(n):
                t = RootedBipTree(p)
                even, _, inner = parts(t)
                for K in ([], inner, [v for v in even if rng.random() < 0.5]):
                    assert matching_count(t, K) == brute_matching_count(p, K)
                    checked += 1
        info["matching_cases"] = checked
        classes = 0
        for n in range(1, 10):
            trees = [RootedBipTree(p) for p in unlabeled_trees(n)]
            codes = [t.code for t in trees]
            assert len(set(codes)) == len(codes)
            for t in trees:
                assert aut_size(t) == count_isomorphisms(t.parent, t.parent)
                assert random_relabel(t, rng).code == t.code
            classes += len(trees)
        info["iso_classes"] = classes
        done = worst = 0
        while done < 100:
            k = int(rng.integers(1, 4))
            t = sample_tk_ball(k, int(rng.choice([2, 4])), rng)
            if t.n > 40 or not _odd_vertices_inner(t):
                continue
            even = parts(t)[0]
            K = [v for v in even if rng.random() < 0.3]
            rest = [v for v in even if v not in K]
            mk = matching_count(t, K)
            if mk == 0 or not rest:
                continue
            v0 = int(rng.choice(rest))
            mk1 = matching_count(t, set(K) | {v0})
            assert mk1 < mk
            signs = tuple(0 if q < 0 else int(rng.choice([-1, 1])) for q in t.parent)
            phi = transversal_vector(t, K, v0, signs)
            d, _, _ = tree_incidence(t, signs)
            assert np.linalg.norm(phi @ d) <= 1e-8 * max(1.0, np.linalg.norm(phi))
            target = mk / (mk - mk1)
            off = [i for i, v in enumerate(even) if v not in K]
            rel = abs(np.sum(phi[off] ** 2) - target) / target
            worst = max(worst, rel)
            assert rel <= 1e-6
            done += 1
        info.update(transversal_cases=done, worst_rel=f"{worst:.1e}")


def _cut_form(sizes):
    if any(c == 1 for c in sizes):
        return 1.0
    s = sum(1 / (c - 1) for c in sizes)
    return 1 / (1 + 1 / s)


def test_criterion_08_nash_williams(capsys):
    with criterion(capsys, 8) as info:
        rng = np.random.default_rng(808)
        done = 0
        while done < 100:
            m = int(rng.integers(5, 9))
            r = int(rng.integers(3, m - 1))
            h = Subspace.from_spanning(rng.standard_normal((r, m)))
            u = int(np.argmax(np.diag(h.projection)))
            count = int(rng.integers(1, min(3, r - 1) + 1))
            xis, gamma = admissible_family(h, u, count, rng)
            cor = dpp.nw_corollary_bound(h, u, xis, gamma)
            low = dpp.nw_lower_bound(h, u, xis)
            marg = dpp.marginal(h, [u])
            assert cor <= low + 1e-8 and low <= marg + 1e-8
            done += 1
        info["chains"] = done
        worst = 0.0
        cases = 0
        for n, cuts in [(4, [{0}]), (4, [{0}, {1}]), (5, [{0}]), (5, [{0}, {1}]),
                        (6, [{0}, {1}]), (7, [{0}, {1}])]:
            g = build("ust", n=n)
            h = row_space(g)
            b = g.sparse.toarray()
            xis = [b[sorted(s)].sum(axis=0) for s in cuts]
            sizes = [int(np.abs(x).sum()) for x in xis]
            bound = dpp.nw_lower_bound(h, 0, xis)
            worst = max(worst, abs(bound - _cut_form(sizes)))
            assert abs(bound - _cut_form(sizes)) < 1e-9
            cases += 1
        info.update(cut_cases=cases, cut_err=f"{worst:.1e}")


def test_criterion_09_identity_gap(capsys):
    with criterion(capsys, 9) as info:
        rng = np.random.default_rng(909)
        done, worst = 0, 0.0
        fams = set()
        for family, params in [("ust", dict(n=10)), ("kalai", dict(n=8, k=2)),
                               ("grassmannian", dict(q=2, n_dim=5, ell=1)),
                               ("subset", dict(n_ground=7, l=2)), ("cube", dict(n_dim=4, ell=1))]:
            g = build(family, **params)
            spec = decompose(g)
            sampler = dpp.IncidenceSampler(g)
            for _ in range(6):
                s = sampler.sample(rng)
                for o in rng.integers(0, g.n, 3):
                    ball = extract_ball(g, s, int(o), 2)
                    if isinstance(ball, NonTree) or ball.n == 1:
                        continue
                    gap = tree_determinant_identity_gap(g, ball, spec)
                    worst = max(worst, gap)
                    assert gap < 1e-8
                    done += 1
                    fams.add(family)
        info.update(subtrees=done, families=len(fams), worst=f"{worst:.1e}")
        assert done >= 50


def test_criterion_10_negative_correlation(capsys):
    with criterion(capsys, 10) as info:
        rng = np.random.default_rng(1010)
        worst = -np.inf
        graphs = [("ust", dict(n=6)), ("kalai", dict(n=6, k=2)), ("cube", dict(n_dim=3, ell=1)),
                  ("grassmannian", dict(q=2, n_dim=4, ell=1)), ("subset", dict(n_ground=6, l=2)),
                  ("colorful", dict(parts=3, part_size=3, ell=1))]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankDropWarning)
            for family, params in graphs:
                h = row_space(build(family, **params))
                m = h.ambient_dim
                for _ in range(200):
                    idx = rng.permutation(m)
                    na, nb = int(rng.integers(1, 4)), int(rng.integers(1, 4))
                    a, b = idx[:na], idx[na:na + nb]
                    excess = (dpp.marginal(h, np.concatenate([a, b]))
                              - dpp.marginal(h, a) * dpp.marginal(h, b))
                    worst = max(worst, excess)
                    assert excess <= 1e-9
        info.update(graphs=len(graphs), pairs=200 * len(graphs), max_excess=f"{worst:.1e}")


def test_criterion_11_quenched_trend(capsys):
    with criterion(capsys, 11, 900) as info:
        variances = []
        means = []
        for n in (50, 200, 800):
            f = quenched_fractions(build("ust", n=n), star_k(1, 1), 2, 200,
                                   np.random.default_rng(1100 + n))
            variances.append(float(np.var(f, ddof=1)))
            means.append(float(f.mean()))
        info.update(var="/".join(f"{v:.2e}" for v in variances),
                    mean="/".join(f"{x:.4f}" for x in means))
        assert _strictly_decreasing(variances)
