import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dqmnav import DataError, NumericError, UsageError
from dqmnav.imu_io import CONSTANT_TURN_SPEED, ImuSample, synth_trajectory
from dqmnav.ins import (
    Attitude,
    NavState,
    dcm_body_to_nav,
    default_initial_state,
    euler_rates,
    ins_step,
    normal_gravity,
    position_error_m,
    propagate,
)

mpmath.mp.dps = 40
A = mpmath.mpf(6378137)
E2 = mpmath.mpf("0.00669437999013")
GE = mpmath.mpf("9.7803253359")
K = mpmath.mpf("0.00193185265241")


def oracle_gravity(lat_deg, alt):
    s = mpmath.sin(mpmath.radians(mpmath.mpf(lat_deg)))
    return GE * (1 + K * s**2) / mpmath.sqrt(1 - E2 * s**2) - mpmath.mpf("3.086e-6") * alt


def oracle_meridian_radius(lat_rad):
    s = mpmath.sin(mpmath.mpf(lat_rad))
    return A * (1 - E2) / (1 - E2 * s**2) ** mpmath.mpf(1.5)


def test_gravity_endpoints():
    assert normal_gravity(0.0, 0.0) == pytest.approx(9.7803253359, abs=1e-12)
    assert normal_gravity(math.pi / 2, 0.0) == pytest.approx(9.8321849379, abs=1e-9)
    assert normal_gravity(math.pi / 2, 0.0) == pytest.approx(float(oracle_gravity(90, 0)), abs=1e-12)


@pytest.mark.parametrize("lat, alt", [(12.0, 0), (39.975172, 30), (-60.0, 1500), (89.9, -20)])
def test_gravity_matches_oracle(lat, alt):
    assert normal_gravity(math.radians(lat), alt) == pytest.approx(float(oracle_gravity(lat, alt)), abs=1e-12)


def test_gravity_reference_site_bounds():
    g = normal_gravity(math.radians(39.975172), 30.0)
    assert normal_gravity(0, 0) < g < normal_gravity(math.pi / 2, 0)
    assert g < normal_gravity(math.radians(39.975172), 0.0)


@settings(max_examples=200)
@given(
    a=st.floats(0, math.pi / 2), b=st.floats(0, math.pi / 2),
    h1=st.floats(-500, 1e4), h2=st.floats(-500, 1e4),
)
def test_gravity_monotone(a, b, h1, h2):
    if b - a > 1e-6:
        assert normal_gravity(a, 0) < normal_gravity(b, 0)
        assert normal_gravity(-a, 0) < normal_gravity(-b, 0)
    if h2 - h1 > 1e-3:
        assert normal_gravity(a, h1) > normal_gravity(a, h2)


def test_dcm_identity():
    np.testing.assert_array_equal(dcm_body_to_nav(Attitude()), np.eye(3))


def test_dcm_yaw_90_forward_is_east():
    c = dcm_body_to_nav(Attitude(yaw=math.pi / 2))
    np.testing.assert_allclose(c @ [1, 0, 0], [0, 1, 0], atol=1e-15)


def test_dcm_orthonormal_random(rng):
    for _ in range(1000):
        att = Attitude(rng.uniform(-math.pi, math.pi), rng.uniform(-1.5, 1.5), rng.uniform(-math.pi, math.pi))
        c = dcm_body_to_nav(att)
        np.testing.assert_allclose(c.T @ c, np.eye(3), atol=1e-12)
        assert np.linalg.det(c) == pytest.approx(1.0, abs=1e-12)


def test_euler_rates_level_is_identity():
    np.testing.assert_array_equal(euler_rates(Attitude(), [0.1, -0.2, 0.3]), [0.1, -0.2, 0.3])


def test_euler_rates_zero_gyro(rng):
    att = Attitude(*rng.uniform(-1, 1, 3))
    np.testing.assert_array_equal(euler_rates(att, [0, 0, 0]), [0, 0, 0])


def test_euler_rates_matches_matrix_form():
    phi, th = 0.3, -0.4
    p, q, r = 0.05, -0.02, 0.11
    m = np.array([
        [1, math.sin(phi) * math.tan(th), math.cos(phi) * math.tan(th)],
        [0, math.cos(phi), -math.sin(phi)],
        [0, math.sin(phi) / math.cos(th), math.cos(phi) / math.cos(th)],
    ])
    np.testing.assert_allclose(euler_rates(Attitude(phi, th, 1.0), [p, q, r]), m @ [p, q, r], rtol=1e-14)


def test_euler_rates_gimbal():
    with pytest.raises(NumericError, match="gimbal"):
        euler_rates(Attitude(pitch=math.pi / 2 - 1e-9), [0, 0, 0])


def _stationary_sample(state, t_ns):
    return ImuSample(t_ns, np.zeros(3), np.array([0.0, 0.0, -normal_gravity(state.lat, state.alt)]))


def test_stationary_step_is_identity():
    s0 = NavState(0, math.radians(39.975172), math.radians(116.344695283), 30.0, att=Attitude(yaw=0.7))
    s1 = ins_step(s0, _stationary_sample(s0, 5_000_000), 0.005)
    assert s1.t_ns == 5_000_000
    assert abs(s1.lat - s0.lat) <= 1e-12 and abs(s1.lon - s0.lon) <= 1e-12
    assert abs(s1.alt - s0.alt) <= 1e-12
    np.testing.assert_allclose(s1.vel_ned, 0.0, atol=1e-12)
    np.testing.assert_allclose(s1.att.as_array(), s0.att.as_array(), atol=1e-12)


def test_north_velocity_moves_latitude():
    lat0 = math.radians(39.975172)
    s0 = NavState(0, lat0, 0.0, 30.0, vel_ned=[1.0, 0.0, 0.0])
    s1 = ins_step(s0, _stationary_sample(s0, 10**9), 1.0)
    expected = 1.0 / (float(oracle_meridian_radius(lat0)) + 30.0)
    assert s1.lat - s0.lat == pytest.approx(expected, rel=1e-12)


def test_step_rejects_bad_dt():
    s0 = default_initial_state()
    with pytest.raises(UsageError):
        ins_step(s0, _stationary_sample(s0, 1), 0.0)


def test_polar_singularity():
    s0 = NavState(0, math.pi / 2, 0.0, 0.0)
    with pytest.raises(NumericError, match="polar"):
        ins_step(s0, _stationary_sample(s0, 1), 0.01)


def test_step_deterministic():
    s0 = NavState(0, 0.5, 1.0, 10.0, vel_ned=[1, 2, 3], att=Attitude(0.1, 0.2, 0.3))
    smp = ImuSample(10, np.array([0.01, 0.02, 0.03]), np.array([0.1, 0.2, -9.7]))
    a, b = ins_step(s0, smp, 0.01), ins_step(s0, smp, 0.01)
    assert (a.lat, a.lon, a.alt) == (b.lat, b.lon, b.alt)
    assert a.vel_ned.tobytes() == b.vel_ned.tobytes()


def test_propagate_stationary_drift_free():
    traj = synth_trajectory("stationary", 10.0, 200.0, lat=39.975172, alt=30.0)
    out = propagate(None, traj)
    assert len(out) == len(traj) - 1
    init = default_initial_state()
    assert position_error_m(init, out[-1]) <= 1e-9
    assert abs(out[-1].lat - init.lat) <= 1e-12 and abs(out[-1].lon - init.lon) <= 1e-12


def test_propagate_two_samples():
    traj = synth_trajectory("stationary", 2.0, 1.0)
    assert len(propagate(NavState(0, 0.0, 0.0, 0.0), traj)) == 1


def test_propagate_reports_failing_index():
    traj = synth_trajectory("stationary", 1.0, 10.0)
    init = NavState(0, 0.0, 0.0, 0.0, att=Attitude(pitch=math.pi / 2))
    with pytest.raises(NumericError) as info:
        propagate(init, traj)
    assert info.value.index == 1


def turn_error(rate_hz, ref, duration=4.0):
    traj = synth_trajectory("constant_turn", duration + 1.0 / rate_hz, rate_hz)
    init = NavState(0, 0.0, 0.0, 0.0, vel_ned=[CONSTANT_TURN_SPEED, 0.0, 0.0])
    final = propagate(init, traj)[-1]
    return position_error_m(ref, final)


@pytest.fixture(scope="module")
def turn_reference():
    # same integrator, 100x finer than the finest step under test
    traj = synth_trajectory("constant_turn", 4.0 + 1 / 20000.0, 20000.0)
    init = NavState(0, 0.0, 0.0, 0.0, vel_ned=[CONSTANT_TURN_SPEED, 0.0, 0.0])
    return propagate(init, traj)[-1]


def test_first_order_convergence(turn_reference):
    errs = [turn_error(r, turn_reference) for r in (50.0, 100.0, 200.0)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[0] / errs[1] > 1.8 and errs[1] / errs[2] > 1.8
