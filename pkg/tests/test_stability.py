import numpy as np
import pytest
from scipy.linalg import expm

from oracles import potential_loop
from releq.central_config import central_configuration_from, ngon_configuration
from releq.errors import InvalidSystemError, NotSymplecticError, WrongPotentialError
from releq.linalg import match_spectra, refined_eigenvalues
from releq.linearization import build_linearization
from releq.potentials import PotentialSpec
from releq.reduction import build_reduction, restrict_blocks
from releq.stability import (bounded_powers_probe, classify, det_p, instability_inequality,
                             ngon_alpha_threshold, reduced_eigenpoly_check,
                             sum_of_squares_check)

LOG = PotentialSpec.logarithmic()
S3, S6 = np.sqrt(3.0), np.sqrt(6.0)


def pipeline(n, spec):
    cc = central_configuration_from(ngon_configuration(n, phase=np.pi / 2), spec)
    lin = build_linearization(cc)
    return cc, lin, restrict_blocks(build_reduction(lin), lin)


def triangle_alpha_spectrum(al):
    w = np.sqrt(3 * al)
    inner = np.sqrt(3 * al * (2 - al))
    z1 = 0.5 * np.sqrt(6 * al ** 2 + 12 * al * (1j * np.sqrt(2 * al) - 1))
    z2 = 0.5 * np.sqrt(6 * al ** 2 - 12 * al * (1j * np.sqrt(2 * al) + 1))
    return np.array([1j * w, -1j * w, 1j * w, -1j * w, 0, 0, 1j * inner, -1j * inner,
                     z1, -z1, z2, -z2])


def pair_sum_loop(masses, q, alpha):
    p = q.reshape(-1, 2)
    total = 0.0
    for i in range(len(masses)):
        for j in range(i + 1, len(masses)):
            total += (masses[i] + masses[j]) / np.linalg.norm(p[i] - p[j]) ** (alpha + 2)
    return total


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_alpha_triangle_is_spectrally_unstable(alpha):
    _, lin, blocks = pipeline(3, PotentialSpec.homogeneous(alpha))
    # defective pairs are compared through their multiplet means
    ev = refined_eigenvalues(lin.L)
    assert match_spectra(ev, triangle_alpha_spectrum(alpha))[0] <= 1e-8
    v = classify(blocks)
    assert not v.spectrally_stable and not v.linearly_stable
    assert match_spectra(v.essential_spectrum, triangle_alpha_spectrum(alpha)[8:])[0] <= 1e-8
    assert v.diagonalizable_L3 and not v.degenerate


def test_log_triangle_is_spectrally_but_not_linearly_stable():
    _, lin, blocks = pipeline(3, LOG)
    ref = np.array([1j * S3, -1j * S3] * 4 + [0, 0, 1j * S6, -1j * S6])
    assert match_spectra(refined_eigenvalues(lin.L), ref)[0] <= 1e-8
    v = classify(blocks)
    assert v.spectrally_stable and not v.linearly_stable and not v.diagonalizable_L3
    mult = sorted((abs(z.imag), a, g) for z, a, g in v.multiplicities)
    assert mult == [(pytest.approx(S3), 2, 1)] * 2


@pytest.mark.parametrize("n", range(3, 9))
@pytest.mark.parametrize("spec", [PotentialSpec.homogeneous(0.5), PotentialSpec.homogeneous(1.0),
                                  PotentialSpec.homogeneous(1.7), LOG], ids=lambda s: s.label())
def test_sum_of_squares(n, spec):
    cc, lin, blocks = pipeline(n, spec)
    rep = sum_of_squares_check(cc, lin, blocks)
    for r in rep.values():
        assert r.relative_error <= 1e-10, r.name
    q, m = cc.positions, cc.sys.masses
    if spec.is_log:
        M = sum(m[i] * m[j] for i in range(n) for j in range(i + 1, n))
        assert rep["closed_form"].rhs == pytest.approx(-4 * n * M, rel=1e-12)
    else:
        a = spec.alpha
        ref = 2 * a * a * pair_sum_loop(m, q, a) - 4 * n * a * potential_loop(m, q, a)
        assert rep["closed_form"].rhs == pytest.approx(ref, rel=1e-12)


def test_log_triangle_sum_is_minus_36():
    cc, lin, blocks = pipeline(3, LOG)
    rep = sum_of_squares_check(cc, lin, blocks)
    assert rep["closed_form"].lhs == pytest.approx(-36.0, abs=1e-10)
    assert rep["first_eight"].rhs == pytest.approx(-24.0)


def test_threshold_closed_form():
    p2 = np.pi ** 2
    assert ngon_alpha_threshold(8).value == pytest.approx(84 * p2 / (512 - 7 * p2), abs=1e-12)
    assert ngon_alpha_threshold(8).value == pytest.approx(1.8718, abs=1e-4)
    assert [ngon_alpha_threshold(n).meaningful for n in range(3, 13)] == [False] * 5 + [True] * 5
    assert ngon_alpha_threshold(7).value == pytest.approx(2.087, abs=1e-3)
    values = [ngon_alpha_threshold(n).value for n in (8, 10, 100, 1000)]
    assert all(a > b for a, b in zip(values, values[1:]))
    with pytest.raises(InvalidSystemError):
        ngon_alpha_threshold(2)


def test_inequality_on_polygons():
    cc, _, _ = pipeline(9, PotentialSpec.homogeneous(1.9))
    assert instability_inequality(cc).fired
    cc, _, _ = pipeline(3, PotentialSpec.homogeneous(0.5))
    assert not instability_inequality(cc).fired
    cc, _, _ = pipeline(3, LOG)
    with pytest.raises(WrongPotentialError):
        instability_inequality(cc)


def sine_form(n, alpha):
    """The polygon inequality at unit circumradius, as a difference of the two sides."""
    s = np.sin(np.arange(1, n) * np.pi / n)
    return np.sum(s ** -(alpha + 2)) - (4 * n + 2 * alpha - 8) / (n * alpha) * np.sum(s ** -alpha)


@pytest.mark.parametrize("n", range(8, 13))
def test_inequality_fires_above_threshold(n):
    t = ngon_alpha_threshold(n).value
    cc, _, blocks = pipeline(n, PotentialSpec.homogeneous(t + 0.02))
    assert instability_inequality(cc).fired
    assert sine_form(n, t + 0.02) > 0
    assert not classify(blocks).spectrally_stable


@pytest.mark.parametrize("n", [3, 5, 9])
def test_inequality_is_the_trace_bound(n):
    # firing is equivalent to the essential squares summing above zero
    for alpha in (0.3, 1.0, 1.8):
        cc, lin, blocks = pipeline(n, PotentialSpec.homogeneous(alpha))
        rep = sum_of_squares_check(cc, lin, blocks)
        essential = rep["closed_form"].rhs - rep["first_eight"].rhs
        verdict = instability_inequality(cc)
        assert verdict.fired == (essential > 0)


def test_power_probe():
    _, _, blocks = pipeline(3, LOG)
    assert not bounded_powers_probe(expm(blocks.L3), m_max=2000).bounded
    th = 0.3
    rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    assert bounded_powers_probe(rot).bounded
    assert not bounded_powers_probe(np.diag([2.0, 0.5])).bounded
    with pytest.raises(NotSymplecticError):
        bounded_powers_probe(np.diag([2.0, 2.0]))


@pytest.mark.parametrize("spec", [PotentialSpec.homogeneous(1.0), LOG], ids=["alpha", "log"])
def test_characteristic_polynomial(spec):
    cc, lin, _ = pipeline(4, spec)
    rep = reduced_eigenpoly_check(cc, lin)
    assert rep["leading"].relative_error <= 1e-9
    assert rep["second"].relative_error <= 1e-9
    assert rep["odd_part"] <= 1e-10
    assert rep["max_scaled_det_at_eigenvalues"] <= 1e-10
    if spec.is_log:
        assert abs(rep["trace_term"]) <= 1e-12
    # det P(lam) = det(lam I - L) by the block structure of L
    lam = 0.3 + 0.7j
    ref = np.linalg.det(lam * np.eye(lin.dim) - lin.L)
    assert det_p(lin, lam) == pytest.approx(ref, rel=1e-10)
