"""Matchings in rooted bipartite trees and the transversal identity.

m(K, T) counts matchings saturating the odd vertices and K. Adding a vertex
v0 to K strictly lowers the count, and the minimal-norm vector supported
off K with phi(v0) = 1 in the left kernel has squared norm m(K)/(m(K) - m(K + v0)).
"""
import numpy as np

from detlocal.limit import sample_tk_ball
from detlocal.rootedtrees import aut_size, matching_count, parts, transversal_vector

rng = np.random.default_rng(5)
t = sample_tk_ball(2, 4, rng)
while t.n > 30:
    t = sample_tk_ball(2, 4, rng)
even, odd, inner = parts(t)
print(f"sampled T_2 ball: {t.n} vertices, code {t.code.decode()}")
print(f"  |Aut| = {aut_size(t)}, m(I, T) = {matching_count(t, inner)}, "
      f"m(empty, T) = {matching_count(t)}")

K = []
for v0 in even[1:6]:
    mk, mk1 = matching_count(t, K), matching_count(t, K + [v0])
    if mk == 0:
        break
    phi = transversal_vector(t, K, v0)
    off = [i for i, v in enumerate(even) if v not in K]
    print(f"  K={K!s:<14} v0={v0:>2}: m(K)={mk:>3} m(K+v0)={mk1:>3} "
          f"|phi|^2={np.sum(phi[off] ** 2):.6f} ratio={mk / (mk - mk1):.6f}")
    K.append(v0)
