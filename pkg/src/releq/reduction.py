"""Symplectic splitting of the linearisation into E1 (centre of mass),
E2 (dilation and rotation) and the essential part E3.

A matrix ``C`` with ``[C, K] = 0`` and ``C^T M C = I`` whose first columns are
``v / sqrt(sum m)``, ``K v / sqrt(sum m)``, ``x``, ``K x`` defines the
symplectic change of variables ``T = diag(C, M C)``. In the new coordinates

    T^-1 L T = [[omega K, I], [C^T D2U C, omega K]]

and ``C^T D2U C = diag(0, 0, c_r, -omega^2, D)``, so ``L`` splits into
4x4 blocks ``L1``, ``L2`` and the essential ``L3 = [[omega K, I], [D, omega K]]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_model import complex_structure, mass_matrix, rotation_generator, translation_vector
from .errors import DegenerateBasisError
from .linalg import null_space
from .linearization import ZERO_EIG_TOL, AugmentedHessian, LinearizedSystem

PAIRING_RANK_TOL = 1e-10
NONDEG_TOL = 1e-8


@dataclass(frozen=True)
class ReductionBasis:
    """Bases of E1, E2, E3 (as columns) and the normalising matrix ``C``.

    ``E3`` is an orthonormal basis of the symplectic complement of
    ``E1 + E2``; ``T`` is the symplectic matrix ``diag(C, M C)``.
    """

    E1: np.ndarray
    E2: np.ndarray
    E3: np.ndarray
    C: np.ndarray
    T: np.ndarray
    seed: int

    @property
    def n(self) -> int:
        return self.C.shape[0] // 2

    def essential_columns(self) -> np.ndarray:
        """Indices of the E3 coordinates in the ``T`` frame."""
        h = 2 * self.n
        idx = np.arange(4, h)
        return np.concatenate([idx, h + idx])

    def symplectic_E3(self) -> np.ndarray:
        """Columns of ``T`` spanning E3 (a symplectic basis)."""
        return self.T[:, self.essential_columns()]


def _pair_basis(first: np.ndarray, K: np.ndarray) -> np.ndarray:
    return np.column_stack([first, K @ first])


def normalizing_matrix(x: np.ndarray, masses, seed: int = 0) -> np.ndarray:
    """``C`` with ``[C, K] = 0``, ``C^T M C = I`` and prescribed first four columns.

    The completion uses random pairs ``(b, K b)`` orthonormalised in the
    ``M`` inner product; pairs stay ``M``-orthogonal because ``M K`` is skew.
    """
    masses = np.asarray(masses, dtype=float)
    n = masses.size
    m2 = np.repeat(masses, 2)
    K = rotation_generator(n)
    v = translation_vector(n) / np.sqrt(masses.sum())
    cols = [v, K @ v]
    xn = x / np.sqrt((m2 * x) @ x)
    cols += [xn, K @ xn]
    if abs((m2 * v) @ xn) > 1e-8:
        raise DegenerateBasisError("configuration is not centred; x is not M-orthogonal to v")
    rng = np.random.default_rng(seed)
    attempts = 0
    while len(cols) < 2 * n:
        b = rng.standard_normal(2 * n)
        Q = np.column_stack(cols)
        for _ in range(2):
            b = b - Q @ (Q.T @ (m2 * b))
        norm = np.sqrt((m2 * b) @ b)
        attempts += 1
        if norm < 1e-6:
            if attempts > 100 * n:
                raise DegenerateBasisError("could not complete C")
            continue
        b /= norm
        cols += [b, K @ b]
    return np.column_stack(cols)


def build_reduction(lin: LinearizedSystem, seed: int = 0) -> ReductionBasis:
    cc = lin.source
    n = cc.n
    x = cc.positions
    M = mass_matrix(cc.sys.masses)
    K = rotation_generator(n)
    v = translation_vector(n)
    z = np.zeros(2 * n)
    E1 = np.column_stack([np.concatenate(p) for p in
                          [(v, z), (K @ v, z), (z, M @ v), (z, K @ M @ v)]])
    E2 = np.column_stack([np.concatenate(p) for p in
                          [(x, z), (K @ x, z), (z, M @ x), (z, K @ M @ x)]])
    E12 = np.hstack([E1, E2])
    s = np.linalg.svd(E12, compute_uv=False)
    if s[-1] <= PAIRING_RANK_TOL * s[0]:
        raise DegenerateBasisError(f"E1 + E2 has dimension < 8 (sigma_min = {s[-1]:.3e})")
    J = complex_structure(4 * n)
    for name, E in (("E1", E1), ("E2", E2)):
        G = E.T @ J.T @ E
        if abs(np.linalg.det(G)) <= NONDEG_TOL * np.linalg.norm(G) ** 4:
            raise DegenerateBasisError(f"symplectic form is degenerate on {name}")
    # Omega(f, e) = <J f, e>; rows are the functionals e -> Omega(f, e)
    pairing = (J @ E12).T
    E3 = null_space(pairing, PAIRING_RANK_TOL)
    if E3.shape[1] != 4 * n - 8:
        raise DegenerateBasisError(f"E3 has dimension {E3.shape[1]}, expected {4 * n - 8}")
    C = normalizing_matrix(x, cc.sys.masses, seed)
    T = np.block([[C, np.zeros_like(C)], [np.zeros_like(C), M @ C]])
    return ReductionBasis(E1, E2, E3, C, T, seed)


@dataclass(frozen=True)
class ReducedBlocks:
    """Restrictions of ``L`` to E1, E2, E3 and the essential quadratic form."""

    L1: np.ndarray
    L2: np.ndarray
    L3: np.ndarray
    B3: np.ndarray
    D_block: np.ndarray
    N3: np.ndarray
    L_frame: np.ndarray
    omega: float

    def spectra(self) -> dict:
        return {name: np.linalg.eigvals(getattr(self, name)) for name in ("L1", "L2", "L3")}


def restrict_blocks(basis: ReductionBasis, lin: LinearizedSystem) -> ReducedBlocks:
    L = lin.L
    L1 = np.linalg.lstsq(basis.E1, L @ basis.E1, rcond=None)[0]
    L2 = np.linalg.lstsq(basis.E2, L @ basis.E2, rcond=None)[0]
    C = basis.C
    h = C.shape[0]
    H = lin.hessian
    CtHC = C.T @ H @ C
    CtHC = 0.5 * (CtHC + CtHC.T)
    D = CtHC[4:, 4:]
    k = h - 4
    Kk = rotation_generator(k // 2) if k else np.zeros((0, 0))
    w = lin.omega
    I = np.eye(k)
    L3 = np.block([[w * Kk, I], [D, w * Kk]])
    B3 = complex_structure(2 * k) @ L3 if k else np.zeros((0, 0))
    B3 = 0.5 * (B3 + B3.T)
    N3 = np.block([[-(D + w * w * I), np.zeros((k, k))], [np.zeros((k, k)), I]])
    Tinv = np.linalg.solve(basis.T, np.eye(2 * h))
    L_frame = Tinv @ L @ basis.T
    return ReducedBlocks(L1, L2, L3, B3, D, N3, L_frame, w)


def essential_congruence(blocks: ReducedBlocks) -> np.ndarray:
    """``P`` with ``P^T B3 P = N3``."""
    k = blocks.D_block.shape[0]
    P = np.eye(2 * k)
    if k:
        P[k:, :k] = -blocks.omega * rotation_generator(k // 2)
    return P


def essential_hessian(blocks: ReducedBlocks, rel_tol: float = ZERO_EIG_TOL) -> AugmentedHessian:
    """``D + omega^2 I``: the Hessian of the potential on the shape sphere."""
    k = blocks.D_block.shape[0]
    return AugmentedHessian.from_matrix(blocks.D_block + blocks.omega ** 2 * np.eye(k), rel_tol)


def essential_restriction(basis: ReductionBasis, lin: LinearizedSystem) -> np.ndarray:
    """``L`` written in the orthonormal E3 basis (not symplectically normalised)."""
    return basis.E3.T @ lin.L @ basis.E3
