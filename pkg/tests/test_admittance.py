"""Guidance-layer tests: gating with hysteresis, virtual-system response,
hold behavior, and the simulated force sensors."""

import numpy as np
import pytest

from tandemlift.admittance import (
    AdmittanceFilter,
    AdmittanceParams,
    gate,
    split_measurement,
    static_deflection,
    terminal_velocity,
)

PARAMS = AdmittanceParams()
DT = 0.01  # position-loop period


def test_gate_zero_force():
    out, is_open = gate(np.zeros(3), PARAMS)
    assert np.allclose(out, 0.0) and not is_open


def test_gate_passes_above_threshold():
    out, is_open = gate(np.array([1.0, 0.0, 0.0]), PARAMS)
    assert is_open and np.allclose(out, [1.0, 0.0, 0.0])


def test_gate_blocks_below_threshold():
    out, is_open = gate(np.array([0.3, 0.0, 0.0]), PARAMS)
    assert not is_open and np.allclose(out, 0.0)


def test_gate_release_hysteresis():
    # open above 0.5, stay open down to 0.45, close below
    _, is_open = gate(np.array([0.6, 0, 0]), PARAMS)
    assert is_open
    out, is_open = gate(np.array([0.47, 0, 0]), PARAMS, was_open=True)
    assert is_open and out[0] == 0.47
    out, is_open = gate(np.array([0.44, 0, 0]), PARAMS, was_open=True)
    assert not is_open and np.allclose(out, 0.0)
    # from closed, 0.47 is not enough to open
    _, is_open = gate(np.array([0.47, 0, 0]), PARAMS, was_open=False)
    assert not is_open


def test_filter_at_rest_stays_at_rest():
    f = AdmittanceFilter(PARAMS, (1.0, -2.0, 3.0))
    ref = f.step(np.zeros(3), DT)
    assert np.allclose(ref.position, [1.0, -2.0, 3.0])
    assert np.allclose(ref.velocity, 0.0)
    assert np.allclose(ref.acceleration, 0.0)


def test_constant_force_reaches_terminal_velocity():
    f = AdmittanceFilter(PARAMS, np.zeros(3))
    force = np.array([1.54, 0.0, 0.0])
    tau = PARAMS.virtual_mass_kg[0] / PARAMS.damping_nspm[0]
    steps = round(5 * tau / DT)
    for _ in range(steps):
        ref = f.step(force, DT)
    v_inf = terminal_velocity(force, PARAMS)
    assert v_inf[0] == pytest.approx(1.0, abs=1e-12)
    assert ref.velocity[0] == pytest.approx(1.0, rel=0.02)
    # runs out to the exact discrete fixed point eventually
    for _ in range(20 * steps):
        ref = f.step(force, DT)
    assert ref.velocity[0] == pytest.approx(1.0, rel=1e-6)


def test_compliance_slope_is_inverse_damping_per_axis():
    for axis in range(3):
        for scale in (0.8, 1.6, 3.0):
            f = AdmittanceFilter(PARAMS, np.zeros(3))
            force = np.zeros(3)
            force[axis] = scale
            tau = PARAMS.virtual_mass_kg[axis] / PARAMS.damping_nspm[axis]
            for _ in range(round(5 * tau / DT)):
                ref = f.step(force, DT)
            expected = scale / PARAMS.damping_nspm[axis]
            assert ref.velocity[axis] == pytest.approx(expected, rel=0.02)


def test_positive_stiffness_deflects_statically():
    params = AdmittanceParams(stiffness_npm=2.0)
    f = AdmittanceFilter(params, np.zeros(3))
    force = np.array([1.2, 0.0, 0.0])
    for _ in range(5000):
        ref = f.step(force, DT)
    assert ref.position[0] == pytest.approx(
        static_deflection(force, params)[0], rel=1e-3)
    assert ref.velocity[0] == pytest.approx(0.0, abs=1e-6)


def test_stiffer_spring_deflects_less():
    deflections = []
    for k in (0.5, 1.0, 2.0, 4.0):
        params = AdmittanceParams(stiffness_npm=k)
        f = AdmittanceFilter(params, np.zeros(3))
        for _ in range(8000):
            ref = f.step(np.array([1.0, 0, 0]), DT)
        deflections.append(ref.position[0])
    assert all(a > b for a, b in zip(deflections, deflections[1:]))


def test_release_coasts_to_exact_standstill():
    f = AdmittanceFilter(PARAMS, np.zeros(3))
    for _ in range(200):
        f.step(np.array([2.0, 0.0, 0.0]), DT)
    assert f.gate_open
    ref = f.step(np.zeros(3), DT)
    assert not f.gate_open
    v_release = ref.velocity[0]
    assert v_release > 0.5
    # velocity decays under the virtual damping, never increasing
    tau = PARAMS.virtual_mass_kg[0] / PARAMS.damping_nspm[0]
    prev = v_release
    for _ in range(round(5 * tau / DT)):
        ref = f.step(np.zeros(3), DT)
        assert 0.0 <= ref.velocity[0] <= prev
        prev = ref.velocity[0]
    assert ref.velocity[0] < 0.01 * v_release
    # eventually snaps to an exact standstill and stays bit-identical
    for _ in range(2000):
        ref = f.step(np.zeros(3), DT)
    assert np.array_equal(ref.velocity, np.zeros(3))
    frozen = ref.position.copy()
    for _ in range(200):
        ref = f.step(np.zeros(3), DT)
    assert np.array_equal(ref.position, frozen)


def test_release_coast_distance_matches_momentum():
    # coasting adds v_release * M/C of travel, the ODE's analytic rundown
    f = AdmittanceFilter(PARAMS, np.zeros(3))
    for _ in range(2000):
        ref = f.step(np.array([1.54, 0.0, 0.0]), DT)
    x_release, v_release = ref.position[0], ref.velocity[0]
    for _ in range(4000):
        ref = f.step(np.zeros(3), DT)
    tau = PARAMS.virtual_mass_kg[0] / PARAMS.damping_nspm[0]
    assert ref.position[0] - x_release == pytest.approx(v_release * tau, rel=0.02)


def test_below_threshold_never_moves():
    f = AdmittanceFilter(PARAMS, np.zeros(3))
    for _ in range(1000):
        ref = f.step(np.array([0.4, 0.2, 0.0]), DT)  # |F| = 0.447 < 0.5
    assert np.array_equal(ref.position, np.zeros(3))


def test_damping_dissipates_injected_power_at_steady_state():
    f = AdmittanceFilter(PARAMS, np.zeros(3))
    force = np.array([1.0, -0.8, 0.6])
    tau = max(m / c for m, c in zip(PARAMS.virtual_mass_kg, PARAMS.damping_nspm))
    for _ in range(round(40 * tau / DT)):
        ref = f.step(force, DT)
    injected = float(force @ ref.velocity)
    dissipated = float(np.asarray(PARAMS.damping_nspm) @ (ref.velocity**2))
    assert dissipated >= 0.0
    assert injected == pytest.approx(dissipated, rel=1e-9)


def test_sensor_split_is_even():
    m = split_measurement(np.array([2.0, 0.0, 0.0]))
    assert np.allclose(m.channels[0], [1.0, 0.0, 0.0])
    assert np.allclose(m.channels[1], [1.0, 0.0, 0.0])
    assert np.allclose(m.total, [2.0, 0.0, 0.0])


def test_sensor_noiseless_measurement_is_exact():
    f = np.array([0.3, -1.2, 4.5])
    m = split_measurement(f, noise_std_n=0.0)
    assert np.array_equal(m.total, f)


def test_sensor_noise_is_zero_mean():
    rng = np.random.default_rng(5)
    n = 100_000
    sigma = 0.1
    truth = np.array([1.0, 0.0, -2.0])
    totals = np.empty((n, 3))
    for i in range(n):
        totals[i] = split_measurement(truth, sigma, rng).total
    err = totals.mean(axis=0) - truth
    # summed channels have std sigma*sqrt(2)
    bound = 3.0 * sigma * np.sqrt(2.0) / np.sqrt(n)
    assert np.all(np.abs(err) < bound)


def test_sensor_noise_requires_rng():
    with pytest.raises(ValueError):
        split_measurement(np.zeros(3), noise_std_n=0.1)


def test_params_validation():
    with pytest.raises(ValueError):
        AdmittanceParams(virtual_mass_kg=0.0)
    with pytest.raises(ValueError):
        AdmittanceParams(damping_nspm=(1.0, 0.0, 1.0))
    with pytest.raises(ValueError):
        AdmittanceParams(stiffness_npm=-1.0)
    with pytest.raises(ValueError):
        AdmittanceParams(force_threshold_n=-0.5)
    scalar = AdmittanceParams(virtual_mass_kg=2.0)
    assert scalar.virtual_mass_kg == (2.0, 2.0, 2.0)


def test_terminal_velocity_requires_zero_stiffness():
    with pytest.raises(ValueError):
        terminal_velocity(np.ones(3), AdmittanceParams(stiffness_npm=1.0))
    with pytest.raises(ValueError):
        static_deflection(np.ones(3), PARAMS)
