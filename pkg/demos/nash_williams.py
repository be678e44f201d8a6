"""Determinantal Nash-Williams bound on a spanning-tree edge marginal.

Vertex cuts separating the endpoints of an edge give vectors in the row
space. Their Gram matrix bounds the marginal from below, and for disjoint
cuts the bound reduces to (1 + 1/S)^-1 with S = sum 1/(|C_i| - 1).
"""
from detlocal import dpp
from detlocal.incidence import build, signed_matrix
from detlocal.spectral import decompose, projection_subspace

for n in (4, 6, 10):
    g = build("ust", n=n)
    h = projection_subspace(decompose(g))
    b = signed_matrix(g)
    xis = [b[0], b[1]]  # star cuts at the two endpoints of edge {0, 1}
    s = sum(1 / (abs(x).sum() - 1) for x in xis)
    print(f"K{n}: bound {dpp.nw_lower_bound(h, 0, xis):.4f}, cut form {1 / (1 + 1 / s):.4f}, "
          f"true marginal {dpp.marginal(h, [0]):.4f}")
