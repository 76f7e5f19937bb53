"""Central configurations: symmetric families and a least-squares refiner."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .core_model import DEFAULT_TOLERANCES, BodySystem, Tolerances, moment_of_inertia
from .errors import (CollisionDuringIterationError, CollisionError, InvalidSystemError,
                     NoConvergenceError)
from .potentials import PotentialSpec, grad_potential, hess_potential, lambda_multiplier

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CentralConfiguration:
    """A centred configuration on the inertia ellipsoid solving the CC equation."""

    sys: BodySystem
    spec: PotentialSpec
    lam: float
    omega: float
    residual_norm: float
    iterations: int = 0

    @property
    def positions(self) -> np.ndarray:
        return self.sys.positions

    @property
    def n(self) -> int:
        return self.sys.n


def ngon_configuration(n: int, unit_masses: bool = True, mass: float = 1.0,
                       phase: float = 0.0, normalize: bool = True) -> BodySystem:
    """Equal masses at the vertices of a regular n-gon.

    Body ``j`` (0-based) sits at angle ``phase + 2 pi j / n``. With ``normalize``
    the polygon is scaled to ``I(q) = 1``; otherwise the circumradius is 1.
    """
    if n < 3:
        raise InvalidSystemError(f"a polygon needs n >= 3, got {n}")
    m = 1.0 if unit_masses else float(mass)
    theta = phase + 2.0 * np.pi * np.arange(n) / n
    pts = np.column_stack([np.cos(theta), np.sin(theta)])
    if normalize:
        pts /= np.sqrt(n * m)
    return BodySystem(np.full(n, m), pts.ravel(), centered=True)


def normalize_configuration(sys: BodySystem) -> BodySystem:
    """Centre the configuration and rescale it onto ``I(q) = 1``."""
    c = sys.centered_copy()
    return c.with_positions(c.positions / np.sqrt(moment_of_inertia(c)), centered=True)


def cc_residual(sys: BodySystem, spec: PotentialSpec) -> np.ndarray:
    """``M^-1 grad U(q) + lambda q`` with ``lambda`` from :func:`lambda_multiplier`."""
    lam = lambda_multiplier(sys, spec)
    return grad_potential(sys, spec) / np.repeat(sys.masses, 2) + lam * sys.positions


def cc_tolerance(sys: BodySystem, spec: PotentialSpec, tol: Tolerances) -> float:
    g = grad_potential(sys, spec) / np.repeat(sys.masses, 2)
    return tol.cc_residual * max(np.linalg.norm(g), 1.0)


def fix_rotation_gauge(sys: BodySystem) -> BodySystem:
    """Rotate rigidly so that body 1 lies on the positive x-axis."""
    x, y = sys.points[0]
    phi = np.arctan2(y, x)
    c, s = np.cos(-phi), np.sin(-phi)
    R = np.array([[c, -s], [s, c]])
    pts = sys.points @ R.T
    pts[0, 1] = 0.0
    return sys.with_positions(pts.ravel())


def _check_distances(sys: BodySystem, tol: Tolerances):
    r = sys.pair_distances()
    if not np.all(np.isfinite(r)) or r.min() <= tol.collision * r.max():
        raise CollisionDuringIterationError(
            f"bodies collide during iteration (min distance {r.min():.3e})")


def _residual_jacobian(sys: BodySystem, spec: PotentialSpec) -> np.ndarray:
    """Jacobian of ``q -> M^-1 grad U(q) + lambda(q) q``."""
    m2 = np.repeat(sys.masses, 2)
    q = sys.positions
    inertia = moment_of_inertia(sys)
    lam = lambda_multiplier(sys, spec)
    if spec.is_log:
        dlam = -lam * 2.0 * m2 * q / inertia
    else:
        dlam = spec.alpha * grad_potential(sys, spec) / inertia - lam * 2.0 * m2 * q / inertia
    return hess_potential(sys, spec) / m2[:, None] + lam * np.eye(q.size) + np.outer(q, dlam)


def solve_central_config(initial: BodySystem, spec: PotentialSpec, max_iter: int = 100,
                         tolerances: Tolerances = DEFAULT_TOLERANCES,
                         gauge: bool = True) -> CentralConfiguration:
    """Refine ``initial`` to a central configuration on the inertia ellipsoid.

    Solves ``R(q) = M^-1 grad U(q) + lambda(q) q = 0`` (``lambda`` eliminated
    through its closed form) together with ``I(q) = 1`` and ``sum m_i q_i = 0``
    by a trust-region least-squares iteration with the exact Jacobian. The
    result is retracted onto the centred ellipsoid and the rotation gauge
    (body 1 on the positive x-axis) is fixed.

    Parameters
    ----------
    max_iter : int
        Budget of Jacobian evaluations.

    Raises
    ------
    NoConvergenceError
        The budget is exhausted or the iteration stalls at a non-solution.
    CollisionDuringIterationError
        An iterate (or the start) has colliding bodies or non-finite values.
    """
    tol = tolerances
    n = initial.n
    try:
        start = normalize_configuration(initial)
        _check_distances(start, tol)
    except (CollisionError, InvalidSystemError, FloatingPointError) as exc:
        raise CollisionDuringIterationError(f"invalid starting configuration: {exc}") from exc

    masses = initial.masses
    m2 = np.repeat(masses, 2)
    centering = np.zeros((2, 2 * n))
    centering[0, 0::2] = masses
    centering[1, 1::2] = masses

    def at(q):
        if not np.all(np.isfinite(q)):
            raise CollisionDuringIterationError("non-finite iterate")
        try:
            return BodySystem(masses, q, tolerances=initial.tolerances)
        except CollisionError as exc:
            raise CollisionDuringIterationError(str(exc)) from exc

    def equations(q):
        sys = at(q)
        try:
            return np.concatenate([cc_residual(sys, spec), [(m2 * q) @ q - 1.0], centering @ q])
        except CollisionError as exc:
            raise CollisionDuringIterationError(str(exc)) from exc

    def jacobian(q):
        sys = at(q)
        return np.vstack([_residual_jacobian(sys, spec), 2.0 * m2 * q, centering])

    if np.linalg.norm(cc_residual(start, spec)) <= cc_tolerance(start, spec, tol):
        # already a solution; nothing to iterate
        x, iterations = start.positions, 0
    else:
        sol = least_squares(equations, start.positions, jac=jacobian, method="trf",
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max(1, 10 * max_iter))
        x, iterations = sol.x, int(sol.njev if sol.njev is not None else sol.nfev)
        log.debug("cc solve: status %d", sol.status)
    try:
        sys = normalize_configuration(at(x))
        _check_distances(sys, tol)
        residual = float(np.linalg.norm(cc_residual(sys, spec)))
    except CollisionError as exc:
        raise CollisionDuringIterationError(str(exc)) from exc
    log.debug("cc solve: %d Jacobians, residual %.3e", iterations, residual)
    if residual > cc_tolerance(sys, spec, tol) or iterations > max_iter:
        raise NoConvergenceError(
            f"central configuration solver did not converge after {iterations} iterations "
            f"(residual {residual:.3e})", iterations=iterations, residual=residual)

    if gauge:
        sys = fix_rotation_gauge(sys)
    sys = BodySystem(sys.masses, sys.positions, centered=True, tolerances=initial.tolerances)
    return _finish(sys, spec, tol, iterations=iterations, slack=10.0)


def _finish(sys: BodySystem, spec: PotentialSpec, tol: Tolerances, iterations: int = 0,
            slack: float = 1.0) -> CentralConfiguration:
    lam = lambda_multiplier(sys, spec)
    res = float(np.linalg.norm(cc_residual(sys, spec)))
    cc = CentralConfiguration(sys, spec, lam, float(np.sqrt(lam)), res, iterations)
    verify_central_configuration(cc, tol, slack)
    return cc


def verify_central_configuration(cc: CentralConfiguration,
                                 tolerances: Tolerances = DEFAULT_TOLERANCES,
                                 slack: float = 1.0):
    """Re-check the three invariants of a central configuration.

    ``slack`` multiplies the residual tolerance.
    """
    sys = cc.sys
    inertia = moment_of_inertia(sys)
    if abs(inertia - 1.0) > 1e-12:
        raise InvalidSystemError(f"moment of inertia {inertia!r} is not 1")
    if np.linalg.norm(sys.center_of_mass_offset()) > sys.center_tolerance():
        raise InvalidSystemError("central configuration is not centred")
    if cc.residual_norm > slack * cc_tolerance(sys, cc.spec, tolerances):
        raise InvalidSystemError(
            f"residual {cc.residual_norm:.3e} too large for a central configuration")


def central_configuration_from(sys: BodySystem, spec: PotentialSpec,
                               tolerances: Tolerances = DEFAULT_TOLERANCES) -> CentralConfiguration:
    """Wrap an exact configuration (e.g. a regular polygon) without iterating."""
    sys = normalize_configuration(sys)
    return _finish(sys, spec, tolerances)
