"""Kalai's weighted count of Q-acyclic 2-complexes on 5 vertices.

Each positive mass is |H_1(T)|^2 / 5^3, so every mass is a multiple of 1/125.
"""
from collections import Counter
from fractions import Fraction

from detlocal import dpp
from detlocal.incidence import build
from detlocal.spectral import decompose, projection_subspace

g = build("kalai", n=5, k=2)
print(f"Kalai(5, 2): {g.n} edges, {g.m} triangles, d = {g.d}")
pairs = dpp.enumerate_all(projection_subspace(decompose(g)))
masses = Counter(Fraction(round(w * 125), 125) for _, w in pairs)
for m, c in sorted(masses.items()):
    print(f"  mass {m}: {c} complexes")
print(f"total mass: {sum(w for _, w in pairs):.12f}")
# on 5 vertices no complex has torsion, so all 125 masses are equal
