"""Small finite fields GF(q) via lookup tables, plus RREF over them."""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np


def _factor_prime_power(q: int) -> tuple[int, int] | None:
    if q < 2:
        return None
    p = 2
    while p * p <= q:
        if q % p == 0:
            break
        p += 1
    else:
        return q, 1
    e = 0
    r = q
    while r % p == 0:
        r //= p
        e += 1
    return (p, e) if r == 1 else None


def is_prime_power(q: int) -> bool:
    return _factor_prime_power(q) is not None


def _polymulmod(a, b, mod, p):
    # polynomials as coefficient lists, lowest degree first
    e = len(mod) - 1
    out = [0] * (2 * e - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = (out[i + j] + x * y) % p
    for deg in range(len(out) - 1, e - 1, -1):
        c = out[deg]
        if c:
            for t in range(e + 1):
                out[deg - e + t] = (out[deg - e + t] - c * mod[t]) % p
    return out[:e]


def _irreducible(p: int, e: int) -> list[int]:
    # monic degree-e polynomial with no roots and no proper factor (brute force)
    for coeffs in itertools.product(range(p), repeat=e):
        mod = list(coeffs) + [1]
        if coeffs[0] == 0:
            continue
        reducible = False
        for deg in range(1, e // 2 + 1):
            for fc in itertools.product(range(p), repeat=deg):
                f = list(fc) + [1]
                # polynomial remainder of mod by f
                r = mod[:]
                for top in range(len(r) - 1, deg - 1, -1):
                    c = r[top]
                    if c:
                        for t in range(deg + 1):
                            r[top - deg + t] = (r[top - deg + t] - c * f[t]) % p
                if not any(r[:deg]):
                    reducible = True
                    break
            if reducible:
                break
        if not reducible:
            return mod
    raise ValueError(f"no irreducible polynomial of degree {e} over GF({p})")


class GF:
    """Arithmetic tables for GF(q); elements are the integers 0..q-1."""

    def __init__(self, q: int):
        pe = _factor_prime_power(q)
        if pe is None:
            raise ValueError(f"q={q} is not a prime power")
        p, e = pe
        self.q, self.p, self.e = q, p, e
        if e == 1:
            a = np.arange(q)
            self.add = (a[:, None] + a[None, :]) % q
            self.mul = (a[:, None] * a[None, :]) % q
        else:
            mod = _irreducible(p, e)
            digits = [[(x // p**i) % p for i in range(e)] for x in range(q)]
            enc = lambda c: sum(int(v) * p**i for i, v in enumerate(c))
            self.add = np.array([[enc([(x + y) % p for x, y in zip(digits[a], digits[b])])
                                  for b in range(q)] for a in range(q)])
            self.mul = np.array([[enc(_polymulmod(digits[a], digits[b], mod, p))
                                  for b in range(q)] for a in range(q)])
        self.neg = np.array([int(np.where(self.add[a] == 0)[0][0]) for a in range(q)])
        self.inv = np.zeros(q, dtype=int)
        for a in range(1, q):
            self.inv[a] = int(np.where(self.mul[a] == 1)[0][0])

    def rref(self, rows) -> tuple[tuple[int, ...], ...]:
        """Reduced row echelon form of the row span, zero rows dropped."""
        m = [list(map(int, r)) for r in rows]
        if not m:
            return ()
        ncols = len(m[0])
        add, mul, neg, inv = self.add, self.mul, self.neg, self.inv
        piv_row = 0
        for col in range(ncols):
            pr = next((i for i in range(piv_row, len(m)) if m[i][col]), None)
            if pr is None:
                continue
            m[piv_row], m[pr] = m[pr], m[piv_row]
            s = inv[m[piv_row][col]]
            m[piv_row] = [int(mul[s][x]) for x in m[piv_row]]
            for i in range(len(m)):
                if i != piv_row and m[i][col]:
                    c = neg[m[i][col]]
                    m[i] = [int(add[x][mul[c][y]]) for x, y in zip(m[i], m[piv_row])]
            piv_row += 1
            if piv_row == len(m):
                break
        return tuple(tuple(r) for r in m[:piv_row])

    def combine(self, coeffs, basis) -> tuple[int, ...]:
        """Linear combination sum_i coeffs[i] * basis[i]."""
        out = [0] * len(basis[0])
        for c, row in zip(coeffs, basis):
            if c:
                out = [int(self.add[x][self.mul[c][y]]) for x, y in zip(out, row)]
        return tuple(out)


@lru_cache(maxsize=None)
def field(q: int) -> GF:
    return GF(q)


def rref_subspaces(f: GF, n: int, dim: int) -> list[tuple[tuple[int, ...], ...]]:
    """All dim-dimensional subspaces of GF(q)^n as RREF matrices, lexicographically sorted."""
    out = []
    q = f.q
    for pivots in itertools.combinations(range(n), dim):
        free = [(i, j) for i, pc in enumerate(pivots) for j in range(pc + 1, n) if j not in pivots]
        for vals in itertools.product(range(q), repeat=len(free)):
            m = [[0] * n for _ in range(dim)]
            for i, pc in enumerate(pivots):
                m[i][pc] = 1
            for (i, j), x in zip(free, vals):
                m[i][j] = x
            out.append(tuple(tuple(r) for r in m))
    out.sort(key=lambda mat: tuple(x for r in mat for x in r))
    return out


def gaussian_binomial(n: int, k: int, q: int) -> int:
    if k < 0 or k > n:
        return 0
    num = den = 1
    for i in range(k):
        num *= q**n - q**i
        den *= q**k - q**i
    return num // den
