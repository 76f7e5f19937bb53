import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import euler_ratio
from releq.central_config import (cc_residual, central_configuration_from, fix_rotation_gauge,
                                  ngon_configuration, normalize_configuration,
                                  solve_central_config, verify_central_configuration)
from releq.core_model import BodySystem, moment_of_inertia
from releq.errors import CollisionDuringIterationError, InvalidSystemError, NoConvergenceError
from releq.potentials import PotentialSpec

ALPHA1 = PotentialSpec.homogeneous(1.0)
LOG = PotentialSpec.logarithmic()
SPECS = [PotentialSpec.homogeneous(0.5), ALPHA1, PotentialSpec.homogeneous(1.5), LOG]


def test_triangle_has_unit_sides_before_rescale():
    tri = ngon_configuration(3, normalize=False)
    # circumradius 1 gives side sqrt(3); the normalised triangle has side 1
    assert np.allclose(tri.pair_distances(), np.sqrt(3))
    assert np.allclose(normalize_configuration(tri.with_positions(tri.positions / np.sqrt(3)))
                       .pair_distances(), 1.0)


def test_square_chords():
    sq = ngon_configuration(4, normalize=False)
    p = sq.points
    for j in range(1, 4):
        assert np.linalg.norm(p[3] - p[(3 + j) % 4]) == pytest.approx(2 * np.sin(j * np.pi / 4))


@pytest.mark.parametrize("n", range(3, 13))
@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.label())
def test_polygons_are_central(n, spec):
    cc = central_configuration_from(ngon_configuration(n), spec)
    assert cc.residual_norm <= 1e-12 * max(1.0, cc.lam)
    assert moment_of_inertia(cc.sys) == pytest.approx(1.0, abs=1e-14)


def test_perturbed_triangle_is_not_central():
    tri = ngon_configuration(3)
    q = tri.positions.copy()
    q[0] += 0.1
    assert np.linalg.norm(cc_residual(tri.with_positions(q, centered=False), ALPHA1)) > 1e-3


@pytest.mark.parametrize("masses", [[1, 1, 1], [1, 2, 3], [3, 0.5, 1]])
@pytest.mark.parametrize("alpha", [1.0, 0.6, None])
def test_collinear_solution_matches_root_bracketing(masses, alpha):
    spec = LOG if alpha is None else PotentialSpec.homogeneous(alpha)
    rho = euler_ratio(masses, alpha)
    start = BodySystem(masses, [0, 0, 1.1, 0, 1 + 0.9 * rho, 0])
    cc = solve_central_config(start, spec)
    x = cc.sys.points[:, 0]
    assert np.allclose(cc.sys.points[:, 1], 0.0, atol=1e-12)
    assert (x[2] - x[1]) / (x[1] - x[0]) == pytest.approx(rho, rel=1e-9)
    assert cc.residual_norm <= 1e-8


def test_exact_polygon_converges_immediately():
    cc = solve_central_config(ngon_configuration(6), ALPHA1)
    assert cc.iterations <= 2


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.5, 1.0, 1.5, None]))
def test_perturbed_triangle_returns_to_triangle(seed, alpha):
    spec = LOG if alpha is None else PotentialSpec.homogeneous(alpha)
    rng = np.random.default_rng(seed)
    tri = ngon_configuration(3)
    start = tri.with_positions(tri.positions + 1e-2 * rng.standard_normal(6), centered=False)
    cc = solve_central_config(start, spec)
    d = cc.sys.pair_distances()
    assert np.allclose(d, d[0], rtol=1e-10)
    x, y = cc.sys.points[0]
    assert y == 0.0 and x > 0


def test_gauge_is_fixed():
    sys = ngon_configuration(5, phase=0.7)
    g = fix_rotation_gauge(sys)
    assert g.points[0, 1] == 0.0 and g.points[0, 0] > 0
    assert np.allclose(g.pair_distances(), sys.pair_distances())


def test_near_collision_fails_cleanly():
    start = BodySystem(np.ones(3), [0.0, 0.0, 1e-13, 0.0, 1.0, 0.3])
    with pytest.raises((CollisionDuringIterationError, NoConvergenceError)):
        solve_central_config(start, ALPHA1)


def test_budget_exhaustion():
    start = BodySystem([1.0, 2.0, 3.0, 4.0], [1, 0, 0, 1.3, -1.1, 0.2, 0.3, -0.8])
    with pytest.raises(NoConvergenceError) as info:
        solve_central_config(start, ALPHA1, max_iter=1)
    assert info.value.iterations is not None


def test_verify_rejects_non_solution():
    cc = central_configuration_from(ngon_configuration(4), ALPHA1)
    bad = cc.__class__(cc.sys, cc.spec, cc.lam, cc.omega, 1.0)
    with pytest.raises(InvalidSystemError):
        verify_central_configuration(bad)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([1.0, None]))
def test_random_four_body_solutions_are_verified(seed, alpha):
    spec = LOG if alpha is None else PotentialSpec.homogeneous(alpha)
    rng = np.random.default_rng(seed)
    th = 2 * np.pi * np.arange(4) / 4 + 0.15 * rng.standard_normal(4)
    start = BodySystem(rng.uniform(0.8, 1.2, 4), np.column_stack([np.cos(th), np.sin(th)]).ravel())
    try:
        cc = solve_central_config(start, spec)
    except NoConvergenceError:
        return
    verify_central_configuration(cc, slack=10.0)
    g = cc_residual(cc.sys, spec)
    assert np.linalg.norm(g) == pytest.approx(cc.residual_norm)
