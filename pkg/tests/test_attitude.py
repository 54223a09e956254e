"""Terminal sliding-mode inner-loop tests: surface algebra, control law,
reaching-time bound, chattering behavior."""

import math

import numpy as np
import pytest

from tandemlift import dynamics as dyn
from tandemlift.attitude import (
    AttitudeController,
    AttitudeGains,
    DerivativeFilter,
    attitude_control,
    reaching_time_bound,
    sliding_surface,
)
from tandemlift.dynamics import SimState, WrenchCommand
from tandemlift.params import SystemParams
from tandemlift.simulation import attitude_reaching_experiment

P = SystemParams()
G = AttitudeGains()


def make_state(attitude=(0, 0, 0), rates=(0, 0, 0)):
    eta = np.zeros(12)
    eta[6:12:2] = attitude
    eta[7:12:2] = rates
    return SimState(0.0, eta)


def test_surface_zero_at_origin():
    assert np.allclose(sliding_surface(np.zeros(3), np.zeros(3), G), 0.0)


def test_surface_benchmark_value():
    s = sliding_surface(np.array([0.1, 0.0, 0.0]), np.zeros(3), G)
    assert s[0] == pytest.approx(22 * 0.1 + 5 * 0.01, abs=1e-12)  # 2.25
    assert s[1] == 0.0 and s[2] == 0.0


def test_surface_is_odd():
    rng = np.random.default_rng(3)
    for _ in range(50):
        e = rng.normal(0, 0.5, 3)
        ed = rng.normal(0, 2.0, 3)
        assert np.allclose(sliding_surface(-e, -ed, G),
                           -sliding_surface(e, ed, G), atol=1e-12)


def test_surface_exponent_one_keeps_sign_term_bounded():
    gains = AttitudeGains(epsilon=1.0)
    s = sliding_surface(np.array([1e-9, 0, 0]), np.zeros(3), gains)
    # |e|^1 sgn(e) == e, so the slope near zero is zeta + gamma
    assert s[0] == pytest.approx((22 + 5) * 1e-9, rel=1e-9)


def test_control_zero_at_perfect_tracking():
    um = attitude_control((0, 0, 0), (0, 0, 0), (0, 0, 0), make_state(), G, P)
    assert np.allclose(um, 0.0)


def test_control_benchmark_value():
    # single roll error of 0.1 rad, everything else quiescent
    state = make_state(attitude=(-0.1, 0, 0))
    um = attitude_control((0, 0, 0), (0, 0, 0), (0, 0, 0), state, G, P)
    assert um[0] == pytest.approx(3.039 * (85 * 2.25 + 55), rel=1e-12)
    assert um[1] == 0.0 and um[2] == 0.0


def test_control_cancels_gyroscopic_coupling():
    # zero tracking error at nonzero rates: closed-loop angular accel must
    # exactly equal the (zero) desired acceleration
    rates = (0.7, -1.3, 2.1)
    state = make_state(rates=rates)
    um = attitude_control((0, 0, 0), rates, (0, 0, 0), state, G, P)
    deriv = dyn.state_derivative(state, WrenchCommand(10.0, tuple(um)),
                                 np.zeros(3), P)
    assert np.allclose(deriv[[7, 9, 11]], 0.0, atol=1e-12)


def test_boundary_layer_softens_switching():
    state = make_state(attitude=(-1e-4, 0, 0))
    hard = attitude_control((0, 0, 0), (0, 0, 0), (0, 0, 0), state, G, P)
    soft_gains = AttitudeGains(boundary_layer_rad=0.01)
    soft = attitude_control((0, 0, 0), (0, 0, 0), (0, 0, 0), state,
                            soft_gains, P)
    assert abs(soft[0]) < abs(hard[0])
    # far outside the layer both laws agree
    state = make_state(attitude=(-0.5, 0, 0))
    hard = attitude_control((0, 0, 0), (0, 0, 0), (0, 0, 0), state, G, P)
    soft = attitude_control((0, 0, 0), (0, 0, 0), (0, 0, 0), state,
                            soft_gains, P)
    assert hard[0] == pytest.approx(soft[0], rel=1e-12)


def test_reaching_bound_zero_on_surface():
    assert np.allclose(reaching_time_bound(np.zeros(3), G), 0.0)


def test_reaching_bound_matches_ode_integration():
    # integrate dV/dt = -2 k1 V - k2 sqrt(2 V) to (near) zero and compare
    k1, k2 = G.kappa1, G.kappa2
    for v0 in (0.5, 2.0, 40.0):
        bound = float(reaching_time_bound(np.array([v0]), G)[0])
        v, t, dt = v0, 0.0, 1e-7
        while v > 1e-18:
            def f(x):
                return -2 * k1 * x - k2 * math.sqrt(2 * max(x, 0.0))
            a = f(v)
            b = f(max(v + 0.5 * dt * a, 0.0))
            c = f(max(v + 0.5 * dt * b, 0.0))
            d = f(max(v + dt * c, 0.0))
            v = v + dt / 6 * (a + 2 * b + 2 * c + d)
            t += dt
        assert t == pytest.approx(bound, abs=1e-5)


def test_reaching_bound_monotone_in_arguments():
    v = np.linspace(0.1, 50, 25)
    b = reaching_time_bound(v, G)
    assert np.all(np.diff(b) > 0)
    for v0 in (0.5, 10.0):
        base = float(reaching_time_bound(np.array([v0]), G)[0])
        stiffer1 = float(reaching_time_bound(
            np.array([v0]), AttitudeGains(kappa1=G.kappa1 * 1.3))[0])
        stiffer2 = float(reaching_time_bound(
            np.array([v0]), AttitudeGains(kappa2=G.kappa2 * 1.3))[0])
        assert stiffer1 < base and stiffer2 < base


def test_reaching_bound_rejects_negative():
    with pytest.raises(ValueError):
        reaching_time_bound(np.array([-0.1, 0, 0]), G)


def test_closed_loop_reaches_before_bound():
    rng = np.random.default_rng(101)
    for _ in range(10):
        e0 = rng.uniform(-0.5, 0.5, 3)
        r = attitude_reaching_experiment(e0)
        assert not np.any(np.isnan(r.reach_time_s))
        assert np.all(r.reach_time_s <= r.bound_s)
        assert r.lyapunov_increase <= 0.0 + 1e-15


def test_chattering_band_shrinks_with_dt():
    e0 = (0.3, -0.2, 0.25)
    r1 = attitude_reaching_experiment(e0, dt=1e-5, settle_window_s=0.02)
    r2 = attitude_reaching_experiment(e0, dt=5e-6, settle_window_s=0.02)
    ratio = r1.band_after_reach / r2.band_after_reach
    # halving dt should roughly halve the post-reach band
    assert np.all(ratio > 1.3) and np.all(ratio < 3.5)


def test_error_decays_monotonically_on_surface():
    # once the surface is reached, |E| must shrink step over step
    gains = AttitudeGains(boundary_layer_rad=0.005)
    ctrl = AttitudeController(gains, P)
    consts = dyn._constants(P)
    eta = tuple([0.0] * 6 + [-0.3, 0.0, 0.2, 0.0, -0.1, 0.0])
    state = SimState(0.0, np.array(eta))
    dt = 1e-4
    reached = False
    prev_norm = None
    for k in range(20000):
        out = ctrl.step(0.0, 0.0, 0.0, state, dt)
        if max(abs(s) for s in out.s_phi) < 1e-3:
            norm = max(abs(e) for e in out.e_phi)
            if reached and prev_norm is not None and prev_norm > 1e-10:
                assert norm <= prev_norm * (1 + 1e-9)
            reached = True
            prev_norm = norm
        m1, m2, m3 = out.moments_nm
        eta = dyn._rk4(eta, P.hover_thrust_n(), m1, m2, m3, 0, 0, 0, dt, consts)
        state.eta[:] = eta
    assert reached
    assert prev_norm < 1e-4


def test_derivative_filter_constant_input_exact_zero():
    f = DerivativeFilter(20.0)
    for _ in range(100):
        vel, acc = f.step((0.3, -0.1, 0.7), 1e-3)
    assert all(v == 0.0 for v in vel)
    assert all(a == 0.0 for a in acc)


def test_derivative_filter_tracks_ramp_slope():
    f = DerivativeFilter(20.0)
    dt = 1e-3
    slope = 0.8
    for k in range(3000):
        vel, _ = f.step((slope * k * dt, 0.0, 0.0), dt)
    assert vel[0] == pytest.approx(slope, rel=0.01)


def test_gain_validation():
    with pytest.raises(ValueError):
        AttitudeGains(epsilon=0.5)
    with pytest.raises(ValueError):
        AttitudeGains(kappa1=0.0)
    with pytest.raises(ValueError):
        AttitudeGains(zeta=(22.0, -30.0, 22.0))
