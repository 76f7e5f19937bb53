"""Interaction potentials, their derivatives and central-configuration multipliers.

Both families share one pairwise kernel. With ``s = alpha`` and ``kappa = alpha``
for the homogeneous potential, and ``s = 0``, ``kappa = 1`` for the logarithmic
one, the pair contributions are

    grad_i  = -kappa m_i m_j r^(-s-2) (q_i - q_j)
    H_ij    =  kappa m_i m_j r^(-s-2) [I - (s + 2) u u^T],   H_ii = -sum_j H_ij
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_model import BodySystem, moment_of_inertia
from .errors import CollisionError, InvalidSystemError, NotOnEllipsoidError, NotTangentError


@dataclass(frozen=True)
class PotentialSpec:
    """Tagged potential choice.

    ``kind`` is ``"alpha"`` (requires ``0 < alpha < 2``) or ``"log"``.
    """

    kind: str
    alpha: float | None = None

    def __post_init__(self):
        if self.kind == "alpha":
            if self.alpha is None or not (0.0 < float(self.alpha) < 2.0):
                raise InvalidSystemError(f"alpha must lie in (0, 2), got {self.alpha}")
            object.__setattr__(self, "alpha", float(self.alpha))
        elif self.kind == "log":
            if self.alpha is not None:
                raise InvalidSystemError("logarithmic potential takes no alpha")
        else:
            raise InvalidSystemError(f"unknown potential kind {self.kind!r}")

    @classmethod
    def homogeneous(cls, alpha: float) -> "PotentialSpec":
        return cls("alpha", alpha)

    @classmethod
    def logarithmic(cls) -> "PotentialSpec":
        return cls("log")

    @property
    def is_log(self) -> bool:
        return self.kind == "log"

    @property
    def exponent(self) -> float:
        return 0.0 if self.is_log else self.alpha

    @property
    def coefficient(self) -> float:
        return 1.0 if self.is_log else self.alpha

    def label(self) -> str:
        return "log" if self.is_log else f"alpha={self.alpha:g}"


def total_mass_product(masses) -> float:
    """``sum_{i<j} m_i m_j``."""
    m = np.asarray(masses, dtype=float)
    return float((m.sum() ** 2 - np.sum(m * m)) / 2.0)


def _pairs(sys: BodySystem):
    i, j = np.triu_indices(sys.n, 1)
    d = sys.points[i] - sys.points[j]
    r = np.linalg.norm(d, axis=1)
    tol = sys.tolerances.collision * float(r.max())
    if np.any(r <= tol):
        k = int(np.argmin(r))
        raise CollisionError(f"bodies {i[k]} and {j[k]} collide (distance {r[k]:.3e})")
    return i, j, d, r, sys.masses[i] * sys.masses[j]


def eval_potential(sys: BodySystem, spec: PotentialSpec) -> float:
    _, _, _, r, mm = _pairs(sys)
    if spec.is_log:
        return float(-np.sum(mm * np.log(r)))
    return float(np.sum(mm * r ** (-spec.alpha)))


def grad_potential(sys: BodySystem, spec: PotentialSpec) -> np.ndarray:
    i, j, d, r, mm = _pairs(sys)
    w = (-spec.coefficient * mm * r ** (-spec.exponent - 2.0))[:, None] * d
    g = np.zeros((sys.n, 2))
    np.add.at(g, i, w)
    np.add.at(g, j, -w)
    return g.ravel()


def hess_potential(sys: BodySystem, spec: PotentialSpec) -> np.ndarray:
    i, j, d, r, mm = _pairs(sys)
    s = spec.exponent
    u = d / r[:, None]
    scale = spec.coefficient * mm * r ** (-s - 2.0)
    blocks = scale[:, None, None] * (np.eye(2)[None] - (s + 2.0) * u[:, :, None] * u[:, None, :])
    n = sys.n
    H = np.zeros((n, 2, n, 2))
    H[i, :, j, :] = blocks
    H[j, :, i, :] = blocks
    for k in range(n):
        H[k, :, k, :] = -H[k, :, :, :].sum(axis=1)
    return H.reshape(2 * n, 2 * n)


def lambda_multiplier(sys: BodySystem, spec: PotentialSpec) -> float:
    """``alpha U / I`` or ``sum m_i m_j / I``; the squared angular velocity."""
    inertia = moment_of_inertia(sys)
    if spec.is_log:
        _pairs(sys)
        return total_mass_product(sys.masses) / inertia
    return spec.alpha * eval_potential(sys, spec) / inertia


def angular_velocity(sys: BodySystem, spec: PotentialSpec) -> float:
    return float(np.sqrt(lambda_multiplier(sys, spec)))


def pair_weight_sum(sys: BodySystem, spec: PotentialSpec) -> float:
    """``sum_{i<j} (m_i + m_j) / r_ij^(alpha + 2)`` (homogeneous only)."""
    i, j, _, r, _ = _pairs(sys)
    return float(np.sum((sys.masses[i] + sys.masses[j]) * r ** (-spec.exponent - 2.0)))


def restricted_hessian_quadform(sys: BodySystem, spec: PotentialSpec, v,
                                tol: float = 1e-9) -> float:
    """Quadratic form of the Hessian of ``U`` restricted to the inertia ellipsoid.

    Valid at central configurations on ``I(q) = 1`` for tangent ``v``
    (``<Mq, v> = 0``).
    """
    v = np.asarray(v, dtype=float)
    inertia = moment_of_inertia(sys)
    if abs(inertia - 1.0) > tol:
        raise NotOnEllipsoidError(f"moment of inertia is {inertia}, expected 1")
    mv = np.repeat(sys.masses, 2) * v
    if abs(mv @ sys.positions) > tol * max(1.0, np.linalg.norm(v)):
        raise NotTangentError(f"<Mq, v> = {mv @ sys.positions:.3e} is not zero")
    quad = v @ hess_potential(sys, spec) @ v
    if spec.is_log:
        return float(quad + total_mass_product(sys.masses) * (mv @ v))
    return float(quad + spec.alpha * eval_potential(sys, spec) * (mv @ v))
