"""End-to-end analysis of one relative equilibrium, serialisable to JSON."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .central_config import CentralConfiguration
from .errors import WrongPotentialError
from .linalg import eigen_clusters, inertia, refined_eigenvalues, spectral_radius
from .linearization import augmented_hessian, build_linearization, parity_verdict
from .reduction import build_reduction, essential_hessian, restrict_blocks
from .spectral_flow import HermitianPath, analyze_path, find_crossings_affine, krein_operator, \
    krein_signature
from .stability import (classify, instability_inequality, reduced_eigenpoly_check,
                        sum_of_squares_check)

IMAG_TOL = 1e-7


def complex_list(values) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(values, dtype=complex)]


def _sorted(values) -> np.ndarray:
    v = np.asarray(values, dtype=complex)
    return v[np.lexsort((np.round(v.real, 10), np.round(v.imag, 10)))]


def flow_matrix(lin, blocks, system: str = "essential") -> np.ndarray:
    """Symmetric matrix ``A`` of the path ``A + t iJ``: ``B3`` or the full ``B``."""
    if system == "essential":
        return blocks.B3
    if system == "full":
        return lin.B
    raise ValueError(f"system must be 'essential' or 'full', got {system!r}")


def default_interval(A: np.ndarray) -> tuple[float, float]:
    """``[eps, T]`` with no crossing in ``(0, eps]`` and every crossing below ``T``."""
    G = krein_operator(A.shape[0])
    top = 2.0 * max(1.0, spectral_radius(1j * G @ A)) + 1.0
    floor = 1e-8 * top
    crossings = [t for t in find_crossings_affine(HermitianPath(A, G, 0.0, top)) if t > floor]
    eps = 0.5 * min(crossings) if crossings else 0.5
    return min(eps, 1e-2), top


def flow_report(A: np.ndarray, interval: tuple[float, float] | None = None):
    a, b = interval if interval is not None else default_interval(A)
    return analyze_path(HermitianPath(A, krein_operator(A.shape[0]), a, b))


def krein_table(L: np.ndarray) -> list:
    """Krein signatures of the purely imaginary eigenvalue clusters of ``L``."""
    scale = max(1.0, spectral_radius(L))
    out = []
    for c in eigen_clusters(L):
        if abs(c.value.real) <= IMAG_TOL * scale:
            out.append(krein_signature(L, 1j * c.value.imag).to_dict())
    return out


@dataclass(frozen=True)
class AnalysisReport:
    payload: dict

    def to_dict(self) -> dict:
        return self.payload


def analyze(cc: CentralConfiguration, seed: int = 0, system: str = "essential",
            interval: tuple[float, float] | None = None) -> AnalysisReport:
    lin = build_linearization(cc)
    basis = build_reduction(lin, seed=seed)
    blocks = restrict_blocks(basis, lin)

    full = augmented_hessian(cc)
    ess = essential_hessian(blocks)
    parity_ess = parity_verdict(ess.morse_index, ess.nullity)
    parity_full = parity_verdict(full.morse_index, full.nullity)

    evidence = {"parity_essential": {"fired": parity_ess.fired, "verdict": parity_ess.value}}
    inequality = None
    if not cc.spec.is_log:
        inequality = instability_inequality(cc)
        evidence["inequality"] = {"fired": inequality.fired, "margin": inequality.margin}
    verdict = classify(blocks, evidence)
    if inequality is not None and verdict.degenerate:
        inequality = inequality._replace(degenerate_caveat=True)
    contradictions = []
    if parity_ess is parity_ess.SPECTRALLY_UNSTABLE and verdict.spectrally_stable:
        contradictions.append("odd essential Morse index but spectrally stable")
    if inequality is not None and inequality.fired and verdict.spectrally_stable:
        contradictions.append("trace inequality fired but spectrally stable")
    verdict.evidence["contradictions"] = contradictions

    sums = sum_of_squares_check(cc, lin, blocks)
    poly = reduced_eigenpoly_check(cc, lin)
    flow = flow_report(flow_matrix(lin, blocks, system), interval)

    payload = {
        "central_configuration": {
            "potential": cc.spec.label(),
            "masses": cc.sys.masses.tolist(),
            "positions": cc.sys.points.tolist(),
            "lambda": cc.lam,
            "omega": cc.omega,
            "residual": cc.residual_norm,
            "iterations": cc.iterations,
        },
        "indices": {
            "morse_index_full": full.morse_index,
            "nullity_full": full.nullity,
            "morse_index_essential": ess.morse_index,
            "nullity_essential": ess.nullity,
            "n_minus_B": inertia(lin.B).negative,
            "n_minus_B3": inertia(blocks.B3).negative,
            "parity_full": parity_full.value,
            "parity_essential": parity_ess.value,
        },
        "spectra": {
            "L": complex_list(_sorted(refined_eigenvalues(lin.L))),
            "L1": complex_list(_sorted(refined_eigenvalues(blocks.L1))),
            "L2": complex_list(_sorted(refined_eigenvalues(blocks.L2))),
            "L3": complex_list(_sorted(refined_eigenvalues(blocks.L3))),
        },
        "verdict": verdict.to_dict(),
        "inequality": inequality.to_dict() if inequality is not None else None,
        "identity_checks": {
            "sum_of_squares": {k: v.to_dict() for k, v in sums.items()},
            "det_p": {k: (v.to_dict() if hasattr(v, "to_dict") else v) for k, v in poly.items()},
        },
        "spectral_flow": {
            "system": system,
            **flow.to_dict(),
            "krein": krein_table(lin.L),
        },
        "seed": seed,
    }
    return AnalysisReport(payload)


def scan_row(cc: CentralConfiguration, seed: int = 0) -> dict:
    """Per-alpha summary used by the parameter scan."""
    if cc.spec.is_log:
        raise WrongPotentialError("alpha scans need a homogeneous potential")
    lin = build_linearization(cc)
    blocks = restrict_blocks(build_reduction(lin, seed=seed), lin)
    verdict = classify(blocks)
    ineq = instability_inequality(cc)
    return {
        "alpha": cc.spec.alpha,
        "spectrally_stable": verdict.spectrally_stable,
        "linearly_stable": verdict.linearly_stable,
        "diagonalizable_L3": verdict.diagonalizable_L3,
        "degenerate": verdict.degenerate,
        "max_abs_re_L3": verdict.max_abs_real,
        "inequality_fired": ineq.fired,
        "inequality_margin": ineq.margin,
    }
