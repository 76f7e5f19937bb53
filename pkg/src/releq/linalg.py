"""Dense linear-algebra helpers shared by the analysis modules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True)
class Inertia:
    negative: int
    zero: int
    positive: int

    @property
    def signature(self) -> int:
        return self.positive - self.negative


def hermitian_part(a):
    a = np.asarray(a)
    return 0.5 * (a + a.conj().T)


def inertia(a, rel_tol: float = 1e-8, abs_floor: float = 0.0) -> Inertia:
    """Counts of negative, zero and positive eigenvalues of a Hermitian matrix.

    An eigenvalue is zero when ``|e| <= rel_tol * max|e|`` (or ``abs_floor``).
    """
    a = np.asarray(a)
    if a.size == 0:
        return Inertia(0, 0, 0)
    e = np.linalg.eigvalsh(hermitian_part(a))
    cut = max(rel_tol * np.max(np.abs(e)), abs_floor)
    neg = int(np.sum(e < -cut))
    pos = int(np.sum(e > cut))
    return Inertia(neg, e.size - neg - pos, pos)


def null_space(a, rel_tol: float = 1e-9) -> np.ndarray:
    """Orthonormal kernel basis with rank decided at ``rel_tol * sigma_max``."""
    a = np.atleast_2d(np.asarray(a))
    if a.size == 0:
        return np.eye(a.shape[1], dtype=a.dtype)
    u, s, vh = np.linalg.svd(a)
    cut = rel_tol * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > cut)) if s[0] > 0 else 0
    return vh[rank:].conj().T


def column_space(a, rel_tol: float = 1e-9):
    """Orthonormal range basis and the SVD pieces needed to pull it back."""
    a = np.atleast_2d(np.asarray(a))
    if a.shape[1] == 0:
        return np.zeros((a.shape[0], 0), dtype=a.dtype), np.zeros(0), np.zeros((0, 0))
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return u[:, :0], s[:0], vh[:0]
    rank = int(np.sum(s > rel_tol * s[0]))
    return u[:, :rank], s[:rank], vh[:rank]


def spectral_radius(a) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(a))))


def cluster_values(values, tol: float) -> list[np.ndarray]:
    """Single-linkage clusters of complex numbers; returns index arrays."""
    values = np.asarray(values, dtype=complex)
    n = values.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        close = np.nonzero(np.abs(values[i + 1:] - values[i]) <= tol)[0] + i + 1
        for j in close:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[rj] = ri
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    clusters = [np.array(g) for g in groups.values()]
    clusters.sort(key=lambda g: (round(values[g].mean().imag, 12), round(values[g].mean().real, 12)))
    return clusters


@dataclass(frozen=True)
class EigenCluster:
    value: complex
    multiplicity: int
    members: np.ndarray


def cluster_radius(a, rel_tol: float = 1e-7) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return rel_tol
    return rel_tol * max(1.0, float(np.linalg.norm(a, 2)))


def eigen_clusters(a, rel_tol: float = 1e-7) -> list[EigenCluster]:
    """Eigenvalues of ``a`` grouped into numerical multiplets.

    The cluster mean stands in for the multiple eigenvalue: a perturbed Jordan
    block splits its eigenvalue by ``O(eps^(1/k))`` but the mean moves only by
    ``O(eps)``. The radius is ``rel_tol * max(1, |a|_2)``; the 2-norm rather
    than the spectral radius, because defective splittings scale with it.
    """
    a = np.asarray(a)
    if a.size == 0:
        return []
    ev = np.linalg.eigvals(a)
    tol = cluster_radius(a, rel_tol)
    return [EigenCluster(complex(ev[g].mean()), int(g.size), ev[g]) for g in cluster_values(ev, tol)]


def refined_eigenvalues(a, rel_tol: float = 1e-7, real_input: bool | None = None) -> np.ndarray:
    """Eigenvalues with every numerical multiplet replaced by its mean.

    For real matrices, means are snapped to the real axis when the cluster is
    self-conjugate.
    """
    a = np.asarray(a)
    if real_input is None:
        real_input = not np.iscomplexobj(a)
    out = []
    for c in eigen_clusters(a, rel_tol):
        v = c.value
        if real_input and np.allclose(np.sort_complex(c.members.conj()),
                                      np.sort_complex(c.members),
                                      atol=rel_tol * max(1.0, abs(v))):
            v = complex(v.real, 0.0)
        out.extend([v] * c.multiplicity)
    return np.array(out, dtype=complex)


def generalized_eigenspace(a, value: complex, radius: float) -> np.ndarray:
    """Orthonormal basis of the invariant subspace for eigenvalues near ``value``.

    Uses a reordered complex Schur form, so the basis is well conditioned even
    for defective eigenvalues.
    """
    a = np.asarray(a, dtype=complex)
    t, z, sdim = sla.schur(a, output="complex", sort=lambda x: abs(x - value) <= radius)
    return z[:, :sdim]


def match_spectra(a, b):
    """Minimum-cost bipartite matching of two complex multisets.

    Returns ``(max_abs_difference, permutation)`` with ``b[perm]`` aligned to ``a``.
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size != b.size:
        raise ValueError(f"spectra have different sizes: {a.size} vs {b.size}")
    if a.size == 0:
        return 0.0, np.zeros(0, dtype=int)
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty_like(cols)
    perm[rows] = cols
    return float(cost[rows, cols].max()), perm
