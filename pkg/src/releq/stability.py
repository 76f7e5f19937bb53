"""Stability classification, trace identities and instability tests."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .central_config import CentralConfiguration
from .core_model import complex_structure, rotation_generator
from .errors import InvalidSystemError, NotSymplecticError, WrongPotentialError
from .linalg import eigen_clusters, null_space, refined_eigenvalues, spectral_radius
from .linearization import LinearizedSystem
from .potentials import eval_potential, pair_weight_sum, total_mass_product
from .reduction import ReducedBlocks

IMAG_TOL = 1e-7
ZERO_TOL = 1e-8
RANK_TOL = 1e-9
INEQUALITY_MARGIN = 1e-9


@dataclass(frozen=True)
class StabilityVerdict:
    """Classification of the essential block ``L3``.

    ``evidence`` records which tests were run and whether they fired.
    """

    essential_spectrum: np.ndarray
    degenerate: bool
    spectrally_stable: bool
    linearly_stable: bool
    diagonalizable_L3: bool
    max_abs_real: float
    multiplicities: tuple
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "essential_spectrum": [[float(z.real), float(z.imag)] for z in self.essential_spectrum],
            "degenerate": self.degenerate,
            "spectrally_stable": self.spectrally_stable,
            "linearly_stable": self.linearly_stable,
            "diagonalizable_L3": self.diagonalizable_L3,
            "max_abs_real": self.max_abs_real,
            "multiplicities": [
                {"eigenvalue": [v.real, v.imag], "algebraic": a, "geometric": g}
                for v, a, g in self.multiplicities
            ],
            "evidence": self.evidence,
        }


def eigen_multiplicities(a, cluster_tol: float = 1e-7, rank_tol: float = RANK_TOL):
    """``(value, algebraic, geometric)`` for every eigenvalue cluster of ``a``."""
    a = np.asarray(a)
    out = []
    for c in eigen_clusters(a, cluster_tol):
        geo = null_space(a - c.value * np.eye(a.shape[0]), rank_tol).shape[1]
        out.append((c.value, c.multiplicity, max(1, min(geo, c.multiplicity))))
    return out


def classify(blocks: ReducedBlocks, evidence: dict | None = None,
             imag_tol: float = IMAG_TOL, zero_tol: float = ZERO_TOL) -> StabilityVerdict:
    L3 = blocks.L3
    if L3.size == 0:
        return StabilityVerdict(np.zeros(0, dtype=complex), False, True, True, True, 0.0, (),
                                dict(evidence or {}))
    ev = refined_eigenvalues(L3)
    scale = max(1.0, spectral_radius(L3))
    max_re = float(np.max(np.abs(ev.real)))
    spectral = max_re <= imag_tol * scale
    degenerate = bool(np.any(np.abs(ev) <= zero_tol * scale))
    mult = eigen_multiplicities(L3)
    diag = all(alg == geo for _, alg, geo in mult)
    ev = ev[np.lexsort((ev.real, ev.imag))]
    info = dict(evidence or {})
    info["direct_spectrum"] = {"fired": not spectral, "max_abs_real": max_re}
    return StabilityVerdict(ev, degenerate, spectral, spectral and diag, diag, max_re,
                            tuple((complex(v), int(a), int(g)) for v, a, g in mult), info)


@dataclass(frozen=True)
class IdentityReport:
    """Two evaluations of one quantity.

    ``scale`` is the magnitude of the terms that were summed; errors are
    measured against it so that cancellation does not inflate them.
    """

    name: str
    lhs: float
    rhs: float
    scale: float = 0.0

    @property
    def relative_error(self) -> float:
        return abs(self.lhs - self.rhs) / max(abs(self.rhs), abs(self.lhs), self.scale, 1e-300)

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "scale": self.scale,
                "relative_error": self.relative_error}


def _sum_of_squares(values) -> float:
    s = np.sum(np.asarray(values, dtype=complex) ** 2)
    return float(s.real)


def sum_of_squares_check(cc: CentralConfiguration, lin: LinearizedSystem,
                         blocks: ReducedBlocks | None = None) -> dict:
    """Sum of squared eigenvalues of ``L`` against its closed forms.

    For ``U_alpha`` the total is ``2 alpha^2 sum (m_i + m_j) / r^(alpha+2) - 4 n alpha U``;
    for ``U_log`` it is ``-4 n sum m_i m_j``. The eigenvalues of ``L1`` and
    ``L2`` contribute ``(2 alpha - 8) omega^2`` (``-8 omega^2`` for the logarithm).
    """
    n = cc.n
    ev = np.linalg.eigvals(lin.L)
    lhs = _sum_of_squares(ev)
    mag = float(np.sum(np.abs(ev) ** 2))
    L = lin.L
    reports = {"trace": IdentityReport("trace(L^2)", lhs, float(np.trace(L @ L)), mag)}
    if cc.spec.is_log:
        closed = -4.0 * n * total_mass_product(cc.sys.masses)
        closed_scale = abs(closed)
        first8 = -8.0 * cc.lam
    else:
        a = cc.spec.alpha
        U = eval_potential(cc.sys, cc.spec)
        t1 = 2 * a * a * pair_weight_sum(cc.sys, cc.spec)
        t2 = 4 * n * a * U
        closed = t1 - t2
        closed_scale = t1 + t2
        first8 = (2 * a - 8) * cc.lam
        reports["first_eight_potential"] = IdentityReport(
            "(2 alpha - 8) omega^2 = 2 alpha (alpha - 4) U", first8, 2 * a * (a - 4) * U)
    reports["closed_form"] = IdentityReport("sum of squares", lhs, closed,
                                            max(mag, closed_scale))
    if blocks is not None:
        ev12 = np.concatenate([np.linalg.eigvals(blocks.L1), np.linalg.eigvals(blocks.L2)])
        reports["first_eight"] = IdentityReport("sum over L1 and L2", _sum_of_squares(ev12),
                                                first8, float(np.sum(np.abs(ev12) ** 2)))
    return reports


class InequalityVerdict(NamedTuple):
    fired: bool
    lhs: float
    rhs: float
    margin: float
    degenerate_caveat: bool = False

    @property
    def label(self) -> str:
        return "unstable_by_trace" if self.fired else "inconclusive"

    def to_dict(self) -> dict:
        return {"verdict": self.label, "lhs": self.lhs, "rhs": self.rhs,
                "relative_margin": self.margin, "degenerate_caveat": self.degenerate_caveat}


def instability_inequality(cc: CentralConfiguration, margin: float = INEQUALITY_MARGIN,
                           degenerate: bool = False) -> InequalityVerdict:
    """Trace test ``sum (m_i + m_j) / r^(alpha+2) > (2n + alpha - 4) / alpha * U``.

    When it holds, the squares of the essential eigenvalues have positive sum,
    which is impossible for a purely imaginary spectrum.
    """
    if cc.spec.is_log:
        raise WrongPotentialError("the trace inequality applies to homogeneous potentials only")
    a = cc.spec.alpha
    lhs = pair_weight_sum(cc.sys, cc.spec)
    rhs = (2 * cc.n + a - 4) / a * eval_potential(cc.sys, cc.spec)
    rel = (lhs - rhs) / max(abs(rhs), 1e-300)
    return InequalityVerdict(bool(rel > margin), float(lhs), float(rhs), float(rel), degenerate)


class ThresholdResult(NamedTuple):
    n: int
    value: float
    meaningful: bool


def ngon_alpha_threshold(n: int) -> ThresholdResult:
    """``2 pi^2 (n^2 - 3n + 2) / (n^3 - pi^2 n + pi^2)``; meaningful when below 2."""
    if n < 3:
        raise InvalidSystemError(f"a polygon needs n >= 3, got {n}")
    p2 = np.pi ** 2
    value = 2 * p2 * (n * n - 3 * n + 2) / (n ** 3 - p2 * n + p2)
    return ThresholdResult(int(n), float(value), bool(value < 2.0))


class PowerProbe(NamedTuple):
    initial_norm: float
    max_norm: float
    growth: float
    bounded: bool
    steps: int


def bounded_powers_probe(S, m_max: int = 10_000, tol: float = 1e-10,
                         growth_factor: float = 10.0) -> PowerProbe:
    """Track ``max_m |S^m|_2`` for ``m <= m_max``; growth past ``growth_factor``
    times the initial norm flags instability."""
    S = np.asarray(S, dtype=float)
    J = complex_structure(S.shape[0])
    if np.linalg.norm(S.T @ J @ S - J) > tol * max(1.0, np.linalg.norm(S, 2) ** 2):
        raise NotSymplecticError("S^T J S != J")
    initial = float(np.linalg.norm(S, 2))
    P = S.copy()
    worst = initial
    m = 1
    while m < m_max:
        P = P @ S
        m += 1
        nrm = float(np.linalg.norm(P, 2))
        worst = max(worst, nrm)
        if worst > growth_factor * initial * 1e6 or not np.isfinite(nrm):
            break
    growth = worst / initial
    return PowerProbe(initial, worst, growth, bool(growth <= growth_factor), m)


def det_p(lin: LinearizedSystem, lam: complex) -> complex:
    """``det P(lam)`` with ``P = M^-1 D2U + (omega^2 - lam^2) I + 2 lam omega K``."""
    n = lin.source.n
    masses = np.repeat(lin.source.sys.masses, 2)
    w = lin.omega
    P = (lin.hessian / masses[:, None] + (w * w - lam * lam) * np.eye(2 * n)
         + 2 * lam * w * rotation_generator(n))
    return complex(np.linalg.det(P))


def det_p_coefficients(lin: LinearizedSystem) -> np.ndarray:
    """Coefficients of ``det P`` in ``lam`` (ascending), by interpolation on a circle."""
    n = lin.source.n
    deg = 4 * n
    N = 2 * (deg + 1)
    R = max(1.0, spectral_radius(lin.L))
    z = R * np.exp(2j * np.pi * np.arange(N) / N)
    vals = np.array([det_p(lin, x) for x in z])
    coef = np.fft.fft(vals) / N
    return coef[:deg + 1] / R ** np.arange(deg + 1)


def reduced_eigenpoly_check(cc: CentralConfiguration, lin: LinearizedSystem) -> dict:
    """Top coefficients of ``det P`` as a polynomial in ``mu = lam^2`` and
    ``det P`` at the eigenvalues of ``L``."""
    n = cc.n
    coef = det_p_coefficients(lin)
    deg = 4 * n
    R = max(1.0, spectral_radius(lin.L))
    sized = np.abs(coef) * R ** np.arange(deg + 1)
    scale = sized.max()
    odd = float(np.max(sized[1::2]) / scale)
    masses = np.repeat(cc.sys.masses, 2)
    tr = float(np.trace(lin.hessian / masses[:, None]))
    second_expected = 2 * n * cc.lam - tr
    second = coef[deg - 2]
    lead = coef[deg]
    residuals = []
    for lam in refined_eigenvalues(lin.L):
        P = (lin.hessian / masses[:, None] + (cc.lam - lam * lam) * np.eye(2 * n)
             + 2 * lam * lin.omega * rotation_generator(n))
        d = abs(np.linalg.det(P))
        residuals.append(d / max(1.0, np.linalg.norm(P, 2)) ** (2 * n))
    return {
        "leading": IdentityReport("leading coefficient", float(lead.real), 1.0),
        "second": IdentityReport("second coefficient", float(second.real), second_expected),
        "odd_part": odd,
        "trace_term": tr,
        "max_scaled_det_at_eigenvalues": float(max(residuals)),
    }
