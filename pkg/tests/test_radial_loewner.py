import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cleobs import radial_loewner as rl

angles = st.floats(-math.pi, math.pi)
gaps = st.floats(1e-3, 2 * math.pi - 1e-3)

# scale-function oracle values, frozen from two independent routes
# (adaptive quadrature of s' and the incomplete-beta closed form)
P_UPPER_6 = 0.424758        # kappa = 6, psi0 = 2 pi / 3, delta = 1e-5
P_UPPER_79 = 0.477128       # kappa = 7.9, psi0 = 2 pi / 3
TAU_6 = 4.10329             # mean exit time, kappa = 6, psi0 = 2 pi / 3


# --- vector field ------------------------------------------------------------------

@given(angles)
def test_field_vanishes_at_origin_and_has_unit_derivative(theta):
    u = complex(math.cos(theta), math.sin(theta))
    assert rl.phi_field(u, 0.0) == 0
    assert rl.field_derivative_at_origin(u) == pytest.approx(1.0, abs=1e-9)


def test_field_singularity():
    with pytest.raises(rl.LoewnerSingularity):
        rl.phi_field(1.0 + 0j, 1.0 + 0j)


@given(theta=angles, phi=angles)
def test_angular_reduction_of_field(theta, phi):
    if abs(math.sin(0.5 * (phi - theta))) < 1e-3:
        return
    u, g = np.exp(1j * theta), np.exp(1j * phi)
    val = rl.phi_field(u, g) / (1j * g)
    assert val.real == pytest.approx(1 / math.tan(0.5 * (phi - theta)), rel=1e-12, abs=1e-12)
    assert abs(val.imag) < 1e-12 * max(1.0, abs(val.real))


def test_drift_identities():
    for kappa in (4.5, 6.0, 7.9):
        assert rl.drift_identity_check(1000, seed=1, kappa=kappa) < 1e-12


def test_drift_zero_at_antipode():
    d_theta, d_phi = rl.angular_drifts(0.3, 0.3 - math.pi, rho=1.7)
    assert abs(d_theta) < 1e-15 and abs(d_phi) < 1e-15


# --- driving process -------------------------------------------------------------------

def test_quadratic_variation_without_force_point():
    t, theta, phi, psi = rl.drive_path(6.0, math.pi, 1.0, 1e-5, np.random.default_rng(4), rho=0.0)
    qv = rl.quadratic_variation(psi)
    assert qv == pytest.approx(6.0 * t[-1], rel=0.02)


@given(c=st.floats(-10, 10), psi=gaps, z=st.floats(-4, 4))
def test_rotation_equivariance(c, psi, z):
    s = rl.DrivingState.start(psi)
    moved = rl.with_state(s, theta=s.theta + c, phi=s.phi + c)
    rng = np.random.default_rng(0)
    a = rl.step_driving(s, 6.0, 1e-3, rng, normal=z)
    b = rl.step_driving(moved, 6.0, 1e-3, rng, normal=z)
    assert a.psi == b.psi
    assert a.t == b.t
    assert b.theta - a.theta == pytest.approx(c, abs=1e-12)


@given(psi=gaps, z=st.floats(-8, 8))
def test_step_stays_inside(psi, z):
    s = rl.step_driving(rl.DrivingState.start(psi), 6.0, 1e-2, np.random.default_rng(0), normal=z)
    assert -rl.DEFAULT_DELTA <= s.psi <= 2 * math.pi + rl.DEFAULT_DELTA
    assert s.t > 0


def test_start_validation():
    with pytest.raises(ValueError):
        rl.DrivingState.start(0.0)
    with pytest.raises(ValueError):
        rl.DrivingState.start(7.0)


# --- Loewner flow ---------------------------------------------------------------------

def test_identity_at_time_zero():
    pts = np.array([0.3 + 0.2j, -0.5j, np.exp(2j)])
    st0 = rl.evolve_flow(np.array([0.0]), np.array([0.0]), pts)
    assert np.array_equal(st0.images, pts)
    assert st0.derivative == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("path", ["brownian", "smooth"])
def test_conformal_radius_and_circle_preservation(path):
    times = np.linspace(0.0, 1.0, 10_001)
    if path == "brownian":
        times, theta = rl.brownian_driving(6.0, 1.0, 1e-4, np.random.default_rng(2))
    else:
        theta = 2.0 * np.sin(3.0 * times)
    circle = np.exp(1j * np.linspace(0.4, 5.9, 10))
    interior = np.array([0.5, 0.2j, -0.3 - 0.3j])
    st1 = rl.evolve_flow(times, theta, np.concatenate([circle, interior]))
    assert abs(st1.derivative / math.e - 1) < 1e-6
    assert st1.max_modulus_drift < 1e-8
    live = ~st1.swallowed[10:]
    assert np.all(np.abs(st1.images[10:][live]) < 1)


def test_swallowing_is_flagged():
    # a point next to the starting driving point is hit almost at once
    times = np.linspace(0.0, 0.5, 5001)
    theta = np.zeros_like(times)
    st1 = rl.evolve_flow(times, theta, np.array([0.97 + 0.0j, -0.5 + 0.0j]))
    assert st1.swallowed[0] and not st1.swallowed[1]
    assert 0 < st1.swallow_time[0] < 0.5


def test_flow_rejects_start_at_driving_point():
    with pytest.raises(rl.LoewnerSingularity):
        rl.evolve_flow(np.array([0.0, 0.1]), np.zeros(2), np.array([1.0 + 0j]))


# --- first passage oracles -----------------------------------------------------------------

def test_scale_function_routes_agree():
    for k in (4.5, 6.0, 7.9):
        for psi0 in (0.5, 2 * math.pi / 3, math.pi, 4.0):
            q = rl.upper_exit_probability(k, psi0, method="quad")
            b = rl.upper_exit_probability(k, psi0, method="beta")
            assert q == pytest.approx(b, rel=1e-9)
    assert rl.upper_exit_probability(6.0, math.pi) == pytest.approx(0.5, abs=1e-12)
    assert rl.upper_exit_probability(6.0, 2 * math.pi / 3) == pytest.approx(P_UPPER_6, abs=1e-6)
    assert rl.upper_exit_probability(7.9, 2 * math.pi / 3) == pytest.approx(P_UPPER_79, abs=1e-6)
    assert rl.mean_exit_time(6.0, 2 * math.pi / 3) == pytest.approx(TAU_6, abs=1e-4)


@pytest.fixture(scope="module")
def passage6():
    return rl.first_passage(6.0, 2 * math.pi / 3, 1e-3, np.random.default_rng(21), 20_000)


def test_passage_side_frequency(passage6):
    se = math.sqrt(P_UPPER_6 * (1 - P_UPPER_6) / passage6.n)
    assert abs(passage6.p_upper - P_UPPER_6) < 3.5 * se
    assert passage6.censored == 0
    assert passage6.p_upper + passage6.p_lower == 1.0


def test_passage_mean_time(passage6):
    # the scheme is weakly first order; at dt = 1e-3 its bias is well under 1%
    assert abs(passage6.mean_tau - TAU_6) < 3.5 * passage6.stderr_tau + 0.01 * TAU_6
    s = passage6.samples()
    assert all(x.tau > 0 and x.side in ("lower", "upper") for x in s)


def test_passage_near_kappa_8():
    res = rl.first_passage(7.9, 2 * math.pi / 3, 2e-3, np.random.default_rng(5), 10_000)
    se = math.sqrt(P_UPPER_79 * (1 - P_UPPER_79) / res.n)
    assert abs(res.p_upper - P_UPPER_79) < 3.5 * se + 0.005


def test_halving_delta():
    a = rl.first_passage(6.0, math.pi, 2e-3, np.random.default_rng(8), 20_000, delta=1e-5)
    b = rl.first_passage(6.0, math.pi, 2e-3, np.random.default_rng(8), 20_000, delta=5e-6)
    assert abs(a.p_upper - b.p_upper) < 0.005 * a.p_upper


def test_passage_validation():
    with pytest.raises(ValueError):
        rl.first_passage(6.0, 1e-6, 1e-3, np.random.default_rng(0), 10)


def test_censoring_reported():
    res = rl.first_passage(6.0, math.pi, 1e-2, np.random.default_rng(1), 500, t_max=0.05)
    assert res.censored > 0
    assert "censored" in {x.side for x in res.samples()}


@pytest.mark.slow
def test_weak_order_of_passage_time():
    # about five minutes; the finest rung carries most of the noise, so the
    # weighted power-law fit is what resolves the order
    study = rl.refinement_study(6.0, 2 * math.pi / 3, [0.32, 0.16, 0.08], 400_000, seed=4)
    print(f"weak order {study.slope:.3f} +- {study.slope_stderr:.3f}")
    assert 0.7 <= study.slope <= 1.3
    assert np.all(study.means < study.exact)
