import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from turret_evasion.errors import AlreadySafe, DegenerateAtOrigin, OutOfParameterRange
from turret_evasion.geometry2d import (
    GAMMA_MAX,
    Drone2D,
    Fate,
    Strategy,
    Turret2D,
    boundary_curves,
    engage,
    intercept,
    radial_region_boundary,
    relative_geometry,
    survivable_boundary,
    tangent_angle,
    tangent_point,
    tangent_region_radius,
    wrap_angle,
)
from oracles import stepped_intercept

# Newton on tan(g) = g from 4.5, run once by hand and frozen
GAMMA_MAX_FROZEN = 4.493409457909064
R_BEHIND_FROZEN = 4.603338848751701

angles = st.floats(-50, 50, allow_nan=False)


@given(angles)
def test_wrap_angle_range_and_congruence(a):
    w = wrap_angle(a)
    assert -math.pi < w <= math.pi
    assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)
    assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-9)


def test_wrap_angle_keeps_pi():
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(-math.pi) == math.pi


def test_turret_validation_and_wrapping():
    assert Turret2D(phi=3 * math.pi).phi == pytest.approx(math.pi)
    with pytest.raises(ValueError):
        Turret2D(omega_max=0)
    with pytest.raises(ValueError):
        Drone2D((1, 0), v=-1)


@pytest.mark.parametrize("phi,p,alpha,r", [
    (0.0, (1, 0), 0.0, 1.0),
    (0.0, (0, 2), math.pi / 2, 2.0),
    (math.pi / 2, (1, 0), -math.pi / 2, 1.0),
])
def test_relative_geometry_examples(phi, p, alpha, r):
    rel = relative_geometry(Turret2D(phi), Drone2D(p, 1.0))
    assert rel.alpha == pytest.approx(alpha, abs=1e-15)
    assert rel.r == pytest.approx(r)


def test_relative_geometry_at_origin():
    with pytest.raises(DegenerateAtOrigin):
        relative_geometry(Turret2D(), Drone2D((0, 0), 1.0))


def test_radial_boundary_examples():
    assert radial_region_boundary(0.0, 1.0) == 1.0
    assert radial_region_boundary(math.pi, 1.0) == pytest.approx(1 + math.pi)
    assert radial_region_boundary(-math.pi / 2, 2.0) == pytest.approx(2 * (1 + math.pi / 2))


def test_tangent_point_examples():
    assert tangent_angle(1.0, 0.3, 1.0) == 0.0
    np.testing.assert_allclose(tangent_point([1.0, 0.0], 0.3, 1.0), [1.0, 0.0], atol=1e-15)
    assert tangent_angle(2.0, 0.1, 1.0) == pytest.approx(math.pi / 3)
    assert tangent_angle(2.0, -0.1, 1.0) == pytest.approx(-math.pi / 3)
    # alpha = 0 breaks toward CCW
    assert tangent_angle(2.0, 0.0, 1.0) > 0
    p0 = np.array([6.202, 0.0])
    q = tangent_point(p0, math.pi / 2, 1.0)
    assert np.linalg.norm(q) == pytest.approx(1.0, abs=1e-12)
    assert abs(np.dot(q - p0, q)) < 1e-9
    with pytest.raises(AlreadySafe):
        tangent_point([0.5, 0.0], 0.2, 1.0)


@given(r=st.floats(1.0001, 50), alpha=st.floats(-math.pi, math.pi), v=st.floats(0.1, 5), theta=st.floats(-math.pi, math.pi))
def test_tangent_point_is_tangent(r, alpha, v, theta):
    p0 = r * v * np.array([math.cos(theta), math.sin(theta)])
    q = tangent_point(p0, alpha, v)
    assert np.linalg.norm(q) == pytest.approx(v, rel=1e-12)
    assert abs(np.dot(q - p0, q)) < 1e-9 * max(1.0, r * v * v)


def test_radial_intercept_examples():
    v, a = 1.0, 0.7
    res = intercept([v * (1 + a), 0.0], a, v, Strategy.RADIAL)
    assert res.fate is Fate.REACHES_SAFETY
    res = intercept([10.0, 0.0], 0.0, 1.0, Strategy.RADIAL)
    assert res.destroyed and res.t_d == 0.0
    np.testing.assert_allclose(res.p_d, [10.0, 0.0])
    res = intercept([0.0, 8.0], 2.0, 1.0, Strategy.RADIAL)
    assert res.t_d == 2.0
    np.testing.assert_allclose(res.p_d, [0.0, 6.0], atol=1e-12)


def test_tangent_intercept_against_fine_steps():
    p0 = np.array([[5.0, 0.0]])
    res = intercept(p0[0], math.pi, 1.0, Strategy.TANGENT)
    dead, t_d, p_d = stepped_intercept(p0, np.array([math.pi]), 1.0, tangent=True, dt=1e-5)
    assert res.destroyed == bool(dead[0])
    assert res.destroyed
    assert abs(res.t_d - t_d[0]) < 1e-3
    assert np.linalg.norm(res.p_d - p_d[0]) < 1e-3


@pytest.mark.parametrize("strategy", [Strategy.RADIAL, Strategy.TANGENT])
def test_intercept_matches_time_stepping(strategy):
    rng = np.random.default_rng(7)
    m = 200
    v = rng.uniform(0.5, 2.0)
    r = v * rng.uniform(1.05, 6.0, m)
    theta = rng.uniform(-math.pi, math.pi, m)
    alpha = rng.uniform(-math.pi, math.pi, m)
    p0 = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    dead, t_d, p_d = stepped_intercept(p0, alpha, v, tangent=strategy is Strategy.TANGENT)
    for i in range(m):
        res = intercept(p0[i], alpha[i], v, strategy)
        assert res.destroyed == bool(dead[i])
        if res.destroyed:
            assert np.linalg.norm(res.p_d - p_d[i]) < 1e-2 * v
            assert abs(res.t_d - t_d[i]) < 1e-2


@settings(max_examples=60)
@given(r=st.floats(1.01, 20), alpha=st.floats(-math.pi, math.pi).filter(lambda a: abs(a) > 1e-6),
       theta=st.floats(-math.pi, math.pi))
def test_death_happens_on_the_firing_line(r, alpha, theta):
    p0 = r * np.array([math.cos(theta), math.sin(theta)])
    res = intercept(p0, alpha, 1.0, Strategy.TANGENT)
    if res.destroyed:
        phi = theta - alpha
        line = phi + math.copysign(1.0, alpha) * res.t_d
        assert abs(wrap_angle(math.atan2(res.p_d[1], res.p_d[0]) - line)) < 1e-8


@settings(max_examples=60)
@given(r=st.floats(1.01, 20), alpha=st.floats(-math.pi, math.pi), scale=st.floats(0.1, 10))
def test_fates_scale_invariant(r, alpha, scale):
    for strategy in Strategy:
        a = intercept([r, 0.0], alpha, 1.0, strategy)
        b = intercept([r * scale, 0.0], alpha, scale, strategy)
        if abs(r - tangent_region_radius(alpha, 1.0)) > 1e-6 and abs(r - (1 + abs(alpha))) > 1e-6:
            assert a.fate is b.fate


def test_engage_rescales_physical_units():
    turret = Turret2D(phi=0.0, omega_max=2.0)
    res = engage(turret, (0.0, 20.0), drone_speed=2.0, strategy=Strategy.RADIAL)
    ref = intercept([0.0, 20.0], math.pi / 2, 1.0, Strategy.RADIAL)
    assert res.destroyed
    assert res.t_d == pytest.approx(ref.t_d / 2.0)


def _newton_gamma_max():
    g = 4.5
    for _ in range(50):
        g -= (math.tan(g) - g) / (1.0 / math.cos(g) ** 2 - 1.0)
    return g


def test_gamma_max_root():
    assert _newton_gamma_max() == pytest.approx(GAMMA_MAX_FROZEN, abs=1e-13)
    assert GAMMA_MAX == pytest.approx(GAMMA_MAX_FROZEN, abs=1e-12)
    p = survivable_boundary(GAMMA_MAX, 0.0, 1.0)
    assert np.linalg.norm(p) == pytest.approx(R_BEHIND_FROZEN, abs=1e-12)
    # the far end of the boundary lies directly behind the turret
    assert abs(abs(math.atan2(p[1], p[0])) - math.pi) < 1e-9


def test_survivable_boundary_examples():
    np.testing.assert_allclose(survivable_boundary(0.0, 0.0, 1.0), [1.0, 0.0])
    with pytest.raises(OutOfParameterRange):
        survivable_boundary(GAMMA_MAX + 1e-3, 0.0, 1.0)


@pytest.mark.parametrize("gamma", [0.3, math.pi / 2, 2.5, 4.0, -1.2])
def test_boundary_flight_time_equals_turret_time(gamma):
    v = 1.0
    p0 = survivable_boundary(gamma, 0.0, v)
    r = np.linalg.norm(p0)
    alpha = math.atan2(p0[1], p0[0])
    q = tangent_point(p0, alpha, v)
    beta = tangent_angle(r, alpha, v)
    assert np.linalg.norm(q - p0) / v == pytest.approx(abs(alpha) + abs(beta), abs=1e-9)
    assert np.linalg.norm(q - p0) == pytest.approx(abs(gamma), abs=1e-9)


@pytest.mark.parametrize("gamma", [0.2, 1.0, 2.0, 3.0, 4.2, -0.7, -2.4])
def test_boundary_consistency(gamma):
    p0 = survivable_boundary(gamma, 0.0, 1.0)
    alpha = math.atan2(p0[1], p0[0])
    u = p0 / np.linalg.norm(p0)
    assert intercept(p0 + 1e-6 * u, alpha, 1.0).destroyed
    assert not intercept(p0 - 1e-6 * u, alpha, 1.0).destroyed


def test_tangent_region_contains_radial_region():
    alphas = np.linspace(-math.pi, math.pi, 1000)
    tang = np.array([tangent_region_radius(a, 1.0) for a in alphas])
    assert np.all(tang > radial_region_boundary(alphas, 1.0))


@given(alpha=st.floats(0, math.pi), v=st.floats(0.1, 10))
def test_region_symmetry_and_scaling(alpha, v):
    assert tangent_region_radius(alpha, v) == pytest.approx(tangent_region_radius(-alpha, v))
    assert tangent_region_radius(alpha, v) == pytest.approx(v * tangent_region_radius(alpha, 1.0), rel=1e-12)
    assert radial_region_boundary(alpha, v) == radial_region_boundary(-alpha, v)


def test_boundary_curves_shape():
    radial, tangent = boundary_curves(1.0, 0.0, 101)
    assert radial.shape == tangent.shape == (101, 2)
    assert np.max(np.linalg.norm(tangent, axis=1)) == pytest.approx(R_BEHIND_FROZEN, abs=1e-9)
    assert np.max(np.linalg.norm(radial, axis=1)) == pytest.approx(1 + math.pi)
