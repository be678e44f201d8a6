"""Spectrum of L- = B^T B / d, row-space projections and structured right vertices."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .incidence import SignedBipartiteIncidence


class NumericalError(ArithmeticError):
    """A numerical guard was violated (residual, clamp band, conditioning)."""


@dataclass(frozen=True, eq=False)
class Subspace:
    """Linear subspace of R^m held as an orthonormal row basis of shape (dim, m)."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.basis, dtype=float))
        object.__setattr__(self, "basis", b)
        if b.shape[0]:
            err = np.abs(b @ b.T - np.eye(b.shape[0])).max()
            if err > 1e-9:
                raise ValueError(f"basis is not orthonormal (max error {err:.2e})")

    @classmethod
    def from_spanning(cls, vectors, ambient_dim: int | None = None, tol: float = 1e-10) -> "Subspace":
        """Orthonormal basis for the span of the given row vectors."""
        v = np.asarray(vectors, dtype=float)
        if v.ndim == 1:
            v = v[None, :]
        if v.shape[0] == 0:
            return cls(np.zeros((0, ambient_dim or v.shape[1])))
        _, s, vt = np.linalg.svd(v, full_matrices=False)
        rank = int(np.sum(s > tol * max(1.0, s[0])))
        return cls(vt[:rank])

    @classmethod
    def full(cls, m: int) -> "Subspace":
        return cls(np.eye(m))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[1]

    @cached_property
    def projection(self) -> np.ndarray:
        return self.basis.T @ self.basis

    def project(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.basis.T @ (self.basis @ x)


@dataclass(frozen=True, eq=False)
class SpectralData:
    eigenvalues: np.ndarray      # descending, length m
    eigenvectors: np.ndarray     # columns are psi_i
    rank: int
    d: int
    k: int
    rank_tol: float

    @property
    def m(self) -> int:
        return self.eigenvectors.shape[0]


def laplacian_minus(g: SignedBipartiteIncidence) -> np.ndarray:
    bt = g.sparse_t
    return (bt @ bt.T).toarray() / g.d


def laplacian_plus(g: SignedBipartiteIncidence) -> np.ndarray:
    b = g.sparse
    return (b @ b.T).toarray() / g.d


def decompose(g: SignedBipartiteIncidence, max_size: int = 5000, rel_tol: float = 1e-9) -> SpectralData:
    """Full symmetric eigendecomposition of L-."""
    if g.m > max_size:
        raise ValueError(f"|U|={g.m} exceeds max_size={max_size}")
    lm = laplacian_minus(g)
    lam, psi = np.linalg.eigh(lm)
    lam, psi = lam[::-1].copy(), psi[:, ::-1].copy()
    resid = np.linalg.norm(lm @ psi - psi * lam, axis=0)
    bad = resid > 1e-8 * np.maximum(1.0, np.abs(lam))
    if np.any(bad):
        raise NumericalError(f"eigen-residual {resid.max():.3e} exceeds tolerance")
    lam = np.where(lam < 0, 0.0, lam)
    tol = rel_tol * (lam[0] if lam.size else 0.0)
    rank = int(np.sum(lam > tol))
    return SpectralData(lam, psi, rank, g.d, g.k, tol)


def projection_subspace(s: SpectralData) -> Subspace:
    """Row space H of B, spanned by the eigenvectors with positive eigenvalue."""
    return Subspace(s.eigenvectors[:, : s.rank].T)


def default_eps_delta(d: int) -> tuple[float, float]:
    return d ** -0.5, d ** -1.25


def _far_mask(s: SpectralData, eps: float) -> np.ndarray:
    lam = s.eigenvalues[: s.rank]
    return (lam - 1.0) ** 2 > eps


def near_one_subspace(s: SpectralData, eps: float) -> Subspace:
    """Span of psi_i over positive eigenvalues with (lambda_i - 1)^2 <= eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    keep = ~_far_mask(s, eps)
    return Subspace(s.eigenvectors[:, : s.rank][:, keep].T)


def structured_vertices(s: SpectralData, eps: float | None = None,
                        delta: float | None = None) -> np.ndarray:
    """Right vertices carrying more than ``delta`` squared mass from eigenvalues far from 1."""
    e0, d0 = default_eps_delta(s.d)
    eps = e0 if eps is None else eps
    delta = d0 if delta is None else delta
    if eps <= 0 or delta <= 0:
        raise ValueError("eps and delta must be positive")
    far = s.eigenvectors[:, : s.rank][:, _far_mask(s, eps)]
    mass = np.einsum("ij,ij->i", far, far)
    return np.nonzero(mass > delta)[0]


def positive_spectrum_plus(g: SignedBipartiteIncidence, rel_tol: float = 1e-9):
    """Positive eigenpairs of L+ = B B^T / d (n x n): returns (lambda desc, W columns).

    L+ and L- share their positive spectrum; psi_i = B^T w_i / sqrt(d lambda_i).
    """
    lam, w = np.linalg.eigh(laplacian_plus(g))
    lam, w = lam[::-1], w[:, ::-1]
    tol = rel_tol * max(lam[0], 0.0)
    keep = lam > tol
    return lam[keep].copy(), w[:, keep].copy()


def structured_vertices_from_graph(g: SignedBipartiteIncidence, eps: float | None = None,
                                  delta: float | None = None) -> np.ndarray:
    """Same set as :func:`structured_vertices`, through the |V| x |V| operator L+.

    Only the eigenvectors with (lambda - 1)^2 > eps are lifted to R^U, so this
    scales to graphs whose |U| rules out a dense |U| x |U| decomposition.
    """
    e0, d0 = default_eps_delta(g.d)
    eps = e0 if eps is None else eps
    delta = d0 if delta is None else delta
    lam, w = positive_spectrum_plus(g)
    far = (lam - 1.0) ** 2 > eps
    if not np.any(far):
        return np.zeros(0, dtype=np.int64)
    psi = (g.sparse_t @ w[:, far]) / np.sqrt(g.d * lam[far])
    mass = np.einsum("ij,ij->i", psi, psi)
    return np.nonzero(mass > delta)[0]


def trace_identity_gap(g: SignedBipartiteIncidence) -> float:
    """|Tr((L+ - I)^2) - k n / d|, with L+ built directly from B B^T / d."""
    lp = ((g.sparse @ g.sparse_t) / g.d).tocoo()
    off = lp.row != lp.col
    diag = np.zeros(g.n)
    np.add.at(diag, lp.row[~off], lp.data[~off])
    tr = float(np.sum(lp.data[off] ** 2) + np.sum((diag - 1.0) ** 2))
    return abs(tr - g.k * g.n / g.d)
