import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from releq.central_config import central_configuration_from, ngon_configuration
from releq.core_model import complex_structure, rotation_generator
from releq.linalg import inertia, match_spectra
from releq.linearization import (AugmentedHessian, ParityVerdict, augmented_hessian,
                                 build_linearization, congruent_block_form, parity_verdict)
from releq.potentials import PotentialSpec

LOG = PotentialSpec.logarithmic()
S3 = np.sqrt(3.0)


def triangle(spec):
    return central_configuration_from(ngon_configuration(3, phase=np.pi / 2), spec)


def reference_alpha_matrix(al):
    """The 12x12 linearisation of the unit-side triangle for ``U_alpha``, entry by entry."""
    w = np.sqrt(3 * al)
    a, b, c = al * (al - 2), al * (al + 2), al * (3 * al + 2)
    r = S3 / 4
    H = np.array([
        [a / 2, 0, -a / 4, -r * b, -a / 4, r * b],
        [0, c / 2, -r * b, -c / 4, r * b, -c / 4],
        [-a / 4, -r * b, al / 2 + 5 * al ** 2 / 4, r * b, -al * (al + 1), 0],
        [-r * b, -c / 4, r * b, -al / 2 + 3 * al ** 2 / 4, 0, al],
        [-a / 4, r * b, -al * (al + 1), 0, al / 2 + 5 * al ** 2 / 4, -r * b],
        [r * b, -c / 4, 0, al, -r * b, -al / 2 + 3 * al ** 2 / 4],
    ])
    K = w * rotation_generator(3)
    return np.block([[K, np.eye(6)], [H, K]])


def reference_log_matrix():
    h = S3 / 2
    H = np.array([
        [-1, 0, 0.5, -h, 0.5, h],
        [0, 1, -h, -0.5, h, -0.5],
        [0.5, -h, 0.5, h, -1, 0],
        [-h, -0.5, h, -0.5, 0, 1],
        [0.5, h, -1, 0, 0.5, -h],
        [h, -0.5, 0, 1, -h, -0.5],
    ])
    K = S3 * rotation_generator(3)
    return np.block([[K, np.eye(6)], [H, K]])


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_alpha_triangle_matches_reference_matrix(alpha):
    lin = build_linearization(triangle(PotentialSpec.homogeneous(alpha)))
    assert np.max(np.abs(lin.L - reference_alpha_matrix(alpha))) <= 1e-12


def test_log_triangle_matches_reference_matrix():
    lin = build_linearization(triangle(LOG))
    assert np.max(np.abs(lin.L - reference_log_matrix())) <= 1e-12


@pytest.mark.parametrize("n", [3, 4, 6])
@pytest.mark.parametrize("spec", [PotentialSpec.homogeneous(1.0), LOG], ids=["alpha", "log"])
def test_structure_of_linearization(n, spec):
    lin = build_linearization(central_configuration_from(ngon_configuration(n), spec))
    J = complex_structure(lin.dim)
    assert np.allclose(lin.B, lin.B.T)
    assert np.allclose(lin.L, -J @ lin.B)
    # Hamiltonian: L^T J + J L = 0
    assert np.allclose(lin.L.T @ J + J @ lin.L, 0.0, atol=1e-12)
    ev = lin.spectrum()
    scale = max(1.0, np.max(np.abs(ev)))
    for image in (-ev, ev.conj(), -ev.conj()):
        assert match_spectra(ev, image)[0] <= 1e-6 * scale


def test_block_congruence():
    lin = build_linearization(triangle(PotentialSpec.homogeneous(1.0)))
    P, N = congruent_block_form(lin)
    h = lin.dim // 2
    assert np.allclose(N[:h, h:], 0.0) and np.allclose(N[h:, :h], 0.0, atol=1e-12)
    Haug = augmented_hessian(lin.source).H_aug
    assert np.allclose(N[:h, :h], -Haug)


def test_rotation_is_in_augmented_kernel():
    cc = triangle(PotentialSpec.homogeneous(1.0))
    H = augmented_hessian(cc).H_aug
    assert np.linalg.norm(H @ (rotation_generator(3) @ cc.positions)) <= 1e-10


@pytest.mark.parametrize("n", [3, 4, 5, 8])
@pytest.mark.parametrize("spec", [PotentialSpec.homogeneous(0.5), PotentialSpec.homogeneous(1.5),
                                  LOG], ids=lambda s: s.label())
def test_negative_index_of_B(n, spec):
    cc = central_configuration_from(ngon_configuration(n), spec)
    aug = augmented_hessian(cc)
    lin = build_linearization(cc)
    # n^-(B) = n^+(D2U + omega^2 M), computed here straight from the spectrum of B
    assert inertia(lin.B).negative == 2 * n - aug.morse_index - aug.nullity


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 10_000))
def test_prescribed_inertia(neg, zero, seed):
    rng = np.random.default_rng(seed)
    d = 6
    diag = np.concatenate([-rng.uniform(0.5, 2, neg), np.zeros(zero),
                           rng.uniform(0.5, 2, max(0, d - neg - zero))])[:d]
    S = rng.standard_normal((d, d)) + 3 * np.eye(d)
    H = AugmentedHessian.from_matrix(S.T @ np.diag(diag) @ S)
    assert (H.morse_index, H.nullity) == (int(np.sum(diag < 0)), int(np.sum(diag == 0)))
    assert H.coindex == int(np.sum(diag > 0))


@pytest.mark.parametrize("morse,nullity,expected", [
    (3, 2, ParityVerdict.SPECTRALLY_UNSTABLE),
    (4, 1, ParityVerdict.LINEARLY_UNSTABLE),
    (4, 0, ParityVerdict.INCONCLUSIVE),
    (3, 1, ParityVerdict.LINEARLY_UNSTABLE),
])
def test_parity_rules(morse, nullity, expected):
    v = parity_verdict(morse, nullity)
    assert v is expected
    assert v.fired == (expected is not ParityVerdict.INCONCLUSIVE)
