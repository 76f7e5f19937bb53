"""Linearised rotating-frame dynamics at a relative equilibrium.

With ``Xi = omega K`` the quadratic Hamiltonian of the linearisation is
``1/2 <B z, z>`` with

    B = [[-D2U, Xi^T], [Xi, M^-1]],        L = -J B = [[omega K, M^-1], [D2U, omega K]].

The congruence ``[[I, 0], [-M Xi, I]]`` brings ``B`` to
``N = diag(-(D2U + omega^2 M), M^-1)``, so the inertia of ``B`` is read off the
augmented Hessian ``D2U + omega^2 M``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .central_config import CentralConfiguration
from .core_model import complex_structure, mass_matrix, rotation_generator
from .linalg import inertia
from .potentials import hess_potential

ZERO_EIG_TOL = 1e-8


@dataclass(frozen=True)
class LinearizedSystem:
    """Matrices of the linearised Hamiltonian system at ``source``."""

    B: np.ndarray
    L: np.ndarray
    Xi: np.ndarray
    omega: float
    source: CentralConfiguration
    momentum: np.ndarray

    @property
    def dim(self) -> int:
        return self.B.shape[0]

    @property
    def hessian(self) -> np.ndarray:
        """``D2U`` at the central configuration (lower-left block of ``L``)."""
        h = self.dim // 2
        return self.L[h:, :h]

    def spectrum(self) -> np.ndarray:
        return np.linalg.eigvals(self.L)


def build_linearization(cc: CentralConfiguration) -> LinearizedSystem:
    n = cc.n
    M = mass_matrix(cc.sys.masses)
    Minv = np.diag(1.0 / np.diag(M))
    K = rotation_generator(n)
    Xi = cc.omega * K
    H = hess_potential(cc.sys, cc.spec)
    H = 0.5 * (H + H.T)
    B = np.block([[-H, Xi.T], [Xi, Minv]])
    L = -complex_structure(4 * n) @ B
    momentum = -M @ Xi @ cc.positions
    return LinearizedSystem(B, L, Xi, cc.omega, cc, momentum)


def congruent_block_form(lin: LinearizedSystem) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(P, N)`` with ``N = P^T B P`` block diagonal."""
    h = lin.dim // 2
    M = mass_matrix(lin.source.sys.masses)
    P = np.eye(lin.dim)
    P[h:, :h] = -M @ lin.Xi
    return P, P.T @ lin.B @ P


@dataclass(frozen=True)
class AugmentedHessian:
    """Symmetric matrix together with its Morse index and nullity."""

    H_aug: np.ndarray
    morse_index: int
    nullity: int

    @property
    def coindex(self) -> int:
        return self.H_aug.shape[0] - self.morse_index - self.nullity

    @classmethod
    def from_matrix(cls, H: np.ndarray, rel_tol: float = ZERO_EIG_TOL) -> "AugmentedHessian":
        H = 0.5 * (H + H.T)
        ine = inertia(H, rel_tol)
        return cls(H, ine.negative, ine.zero)


def augmented_hessian(cc: CentralConfiguration, rel_tol: float = ZERO_EIG_TOL) -> AugmentedHessian:
    """``D2U + omega^2 M``, the Hessian of the augmented potential."""
    H = hess_potential(cc.sys, cc.spec) + cc.lam * mass_matrix(cc.sys.masses)
    return AugmentedHessian.from_matrix(H, rel_tol)


class ParityVerdict(enum.Enum):
    SPECTRALLY_UNSTABLE = "unstable_by_parity_spectral"
    LINEARLY_UNSTABLE = "unstable_by_parity_linear"
    INCONCLUSIVE = "inconclusive"

    @property
    def fired(self) -> bool:
        return self is not ParityVerdict.INCONCLUSIVE


def parity_verdict(morse_index: int, nullity: int) -> ParityVerdict:
    """Odd Morse index with even nullity forces spectral instability; any odd
    count forces linear instability."""
    if nullity % 2 == 0 and morse_index % 2 == 1:
        return ParityVerdict.SPECTRALLY_UNSTABLE
    if morse_index % 2 == 1 or nullity % 2 == 1:
        return ParityVerdict.LINEARLY_UNSTABLE
    return ParityVerdict.INCONCLUSIVE


def parity_instability_test(cc: CentralConfiguration) -> ParityVerdict:
    h = augmented_hessian(cc)
    return parity_verdict(h.morse_index, h.nullity)
