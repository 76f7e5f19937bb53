"""Kinematic substrate: bodies, mass matrix and the planar complex structures.

Positions are stored as a flat ``2n`` vector ``(x_1, y_1, ..., x_n, y_n)``.
Two complex structures coexist and are kept apart on purpose:

* ``K`` is block diagonal with the 2x2 rotation generator ``[[0, -1], [1, 0]]``
  on each body (it rotates every body in its own plane);
* ``J`` is the standard ``[[0, -I], [I, 0]]`` on position/momentum halves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSystemError

ROT2 = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared by the analysis pipeline.

    All values are relative; each consumer scales them by the natural size
    of the object it inspects (norm, spectral radius, largest eigenvalue).
    """

    center: float = 1e-10
    collision: float = 1e-9
    cc_residual: float = 1e-11
    zero_eig: float = 1e-8
    rank: float = 1e-9
    cluster: float = 1e-7
    imag_axis: float = 1e-7
    nondeg: float = 1e-8
    inequality_margin: float = 1e-9

    def replace(self, **overrides) -> "Tolerances":
        unknown = set(overrides) - set(self.__dataclass_fields__)
        if unknown:
            raise InvalidSystemError(f"unknown tolerance keys: {sorted(unknown)}")
        values = {name: getattr(self, name) for name in self.__dataclass_fields__}
        values.update({k: float(v) for k, v in overrides.items()})
        return Tolerances(**values)


DEFAULT_TOLERANCES = Tolerances()


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BodySystem:
    """Masses plus a planar configuration.

    Parameters
    ----------
    masses : array_like, shape (n,)
        Strictly positive masses, ``n >= 3``.
    positions : array_like, shape (2n,) or (n, 2)
        Planar coordinates, flattened row-major as ``(x_1, y_1, x_2, ...)``.
    centered : bool
        When set, the centre of mass must sit at the origin.
    """

    masses: np.ndarray
    positions: np.ndarray
    centered: bool = False
    tolerances: Tolerances = field(default=DEFAULT_TOLERANCES, repr=False, compare=False)

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float).ravel()
        q = np.asarray(self.positions, dtype=float).ravel()
        if m.size < 3:
            raise InvalidSystemError(f"need at least 3 bodies, got {m.size}")
        if q.size != 2 * m.size:
            raise InvalidSystemError(
                f"positions must have 2n = {2 * m.size} entries, got {q.size}")
        if not np.all(np.isfinite(m)) or not np.all(np.isfinite(q)):
            raise InvalidSystemError("masses and positions must be finite")
        if np.any(m <= 0):
            raise InvalidSystemError("all masses must be strictly positive")
        object.__setattr__(self, "masses", _frozen(m))
        object.__setattr__(self, "positions", _frozen(q))
        if self.centered:
            c = self.center_of_mass_offset()
            if np.linalg.norm(c) > self.center_tolerance():
                raise InvalidSystemError(f"system flagged centered but sum m_i q_i = {c}")

    @property
    def n(self) -> int:
        return self.masses.size

    @property
    def points(self) -> np.ndarray:
        """Positions reshaped to ``(n, 2)``."""
        return self.positions.reshape(self.n, 2)

    def center_of_mass_offset(self) -> np.ndarray:
        return self.masses @ self.points

    def center_tolerance(self) -> float:
        scale = np.max(np.linalg.norm(self.points, axis=1))
        return self.tolerances.center * self.masses.sum() * max(scale, np.finfo(float).tiny)

    def with_positions(self, positions, centered=None) -> "BodySystem":
        return BodySystem(self.masses, positions,
                          self.centered if centered is None else centered,
                          self.tolerances)

    def centered_copy(self) -> "BodySystem":
        """Translate so that the centre of mass is at the origin."""
        shift = self.center_of_mass_offset() / self.masses.sum()
        return BodySystem(self.masses, (self.points - shift).ravel(), True, self.tolerances)

    def pair_distances(self) -> np.ndarray:
        """Distances ``|q_i - q_j|`` for ``i < j`` in ``np.triu_indices`` order."""
        i, j = np.triu_indices(self.n, 1)
        return np.linalg.norm(self.points[i] - self.points[j], axis=1)

    def diameter(self) -> float:
        return float(self.pair_distances().max())


def mass_matrix(masses) -> np.ndarray:
    """``M = diag(m_1 I_2, ..., m_n I_2)``."""
    return np.diag(np.repeat(np.asarray(masses, dtype=float), 2))


def rotation_generator(n: int) -> np.ndarray:
    """The ``2n x 2n`` block-diagonal ``K``; ``K^2 = -I`` entrywise exactly."""
    return np.kron(np.eye(n), ROT2)


def complex_structure(dim: int) -> np.ndarray:
    """The standard ``J = [[0, -I], [I, 0]]`` of size ``dim`` (even)."""
    if dim % 2:
        raise ValueError(f"complex structure needs an even dimension, got {dim}")
    h = dim // 2
    J = np.zeros((dim, dim))
    J[:h, h:] = -np.eye(h)
    J[h:, :h] = np.eye(h)
    return J


def translation_vector(n: int) -> np.ndarray:
    """``v = (1, 0, 1, 0, ..., 1, 0)``."""
    v = np.zeros(2 * n)
    v[0::2] = 1.0
    return v


@dataclass(frozen=True)
class StructuralMatrices:
    M: np.ndarray
    K: np.ndarray
    J2n: np.ndarray
    J4n: np.ndarray

    @classmethod
    def for_system(cls, sys: BodySystem) -> "StructuralMatrices":
        n = sys.n
        return cls(_frozen(mass_matrix(sys.masses)), _frozen(rotation_generator(n)),
                   _frozen(complex_structure(2 * n)), _frozen(complex_structure(4 * n)))

    def omega(self, u, v) -> float:
        return symplectic_pairing(u, v)


def moment_of_inertia(sys: BodySystem) -> float:
    """Twice the classical moment of inertia, ``<Mq, q> = sum m_i |q_i|^2``."""
    return float(np.sum(sys.masses * np.sum(sys.points ** 2, axis=1)))


def symplectic_pairing(u, v) -> float:
    """``Omega(u, v) = <J u, v>`` with the standard ``J`` of matching size."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    h = u.size // 2
    if u.size % 2:
        raise ValueError("symplectic pairing needs even-dimensional vectors")
    # J u = (-u_p, u_q)
    return float(-u[h:] @ v[:h] + u[:h] @ v[h:])
