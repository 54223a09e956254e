"""Wrench allocation tests: effectiveness matrix, weighted pseudo-inverse
optimality, and the rotor-speed map."""

import numpy as np
import pytest

from tandemlift.allocation import (
    AllocationWeights,
    Allocator,
    negative_thrusts,
    rotor_speeds,
    rotor_thrusts,
    rotor_wrench,
    wrench_matrix,
)
from tandemlift.dynamics import WrenchCommand
from tandemlift.errors import AllocationInfeasibleError, RotorSaturationError
from tandemlift.params import RotorModel, SystemParams

P = SystemParams()


def oracle_min_weighted_norm(lam, w, sigma):
    """Independent equality-constrained least-squares solution via pinv."""
    gamma_inv = np.diag(1.0 / np.sqrt(sigma))
    return gamma_inv @ np.linalg.pinv(lam @ gamma_inv) @ w


def test_matrix_rows_for_benchmark_geometry():
    lam = wrench_matrix(P)
    assert np.allclose(lam[0], [1, 0, 0, 0, 1, 0, 0, 0])
    assert np.allclose(lam[1], [1.1, 1, 0, 0, -1.1, 1, 0, 0])
    assert np.allclose(lam[2], [0, 0, 1, 0, 0, 0, 1, 0])
    assert np.allclose(lam[3], [0, 0, 0, 1, 0, 0, 0, 1])


def test_matrix_colocated_geometry_degenerates_to_passthrough():
    lam = wrench_matrix(SystemParams(attach_offset_m=(0.0, 0.0, 0.0)))
    assert np.allclose(lam[0], [1, 0, 0, 0, 1, 0, 0, 0])
    assert np.allclose(lam[1], [0, 1, 0, 0, 0, 1, 0, 0])
    assert np.allclose(lam[2], [0, 0, 1, 0, 0, 0, 1, 0])


def test_matrix_full_rank_across_geometries():
    rng = np.random.default_rng(11)
    for _ in range(50):
        offset = tuple(rng.uniform(-2, 2, 3))
        lam = wrench_matrix(SystemParams(attach_offset_m=offset))
        assert np.linalg.matrix_rank(lam) == 4


def test_hover_wrench_splits_evenly():
    u8 = Allocator(P)(WrenchCommand(31.8825, (0.0, 0.0, 0.0)))
    expected = np.zeros(8)
    expected[0] = expected[4] = 15.94125
    assert np.allclose(u8, expected, atol=1e-12)


def test_zero_wrench_allocates_zero():
    assert np.allclose(Allocator(P)(np.zeros(4)), 0.0)


def test_allocation_exact_and_matches_oracle():
    rng = np.random.default_rng(5)
    lam = wrench_matrix(P)
    for _ in range(200):
        w = rng.normal(0, 20, 4)
        sigma = rng.uniform(0.2, 5.0, 8)
        u = Allocator(P, AllocationWeights(tuple(sigma)))(w)
        assert np.linalg.norm(lam @ u - w) < 1e-9
        u_ref = oracle_min_weighted_norm(lam, w, sigma)
        cost = np.linalg.norm(np.sqrt(sigma) * u)
        cost_ref = np.linalg.norm(np.sqrt(sigma) * u_ref)
        assert cost == pytest.approx(cost_ref, abs=1e-7)


def test_allocation_beats_nullspace_perturbations():
    rng = np.random.default_rng(17)
    lam = wrench_matrix(P)
    # nullspace basis from the SVD's trailing right-singular vectors
    _, _, vt = np.linalg.svd(lam)
    null = vt[4:].T
    for _ in range(5):
        w = rng.normal(0, 10, 4)
        sigma = rng.uniform(0.5, 3.0, 8)
        gamma = np.sqrt(sigma)
        u = Allocator(P, AllocationWeights(tuple(sigma)))(w)
        base = np.linalg.norm(gamma * u)
        for _ in range(1000):
            v = u + null @ rng.normal(0, 2, 4)
            assert np.linalg.norm(lam @ v - w) < 1e-8
            assert np.linalg.norm(gamma * v) >= base - 1e-9


def test_allocation_scales_linearly():
    rng = np.random.default_rng(23)
    alloc = Allocator(P)
    for _ in range(20):
        w = rng.normal(0, 15, 4)
        alpha = float(rng.uniform(0, 4))
        assert np.allclose(alloc(alpha * w), alpha * alloc(w), atol=1e-12)


def test_raising_an_actuator_weight_never_raises_its_share():
    rng = np.random.default_rng(29)
    for _ in range(200):
        w = rng.normal(0, 20, 4)
        sigma = rng.uniform(0.2, 5.0, 8)
        j = int(rng.integers(0, 8))
        u_before = Allocator(P, AllocationWeights(tuple(sigma)))(w)
        sigma[j] *= float(rng.uniform(1.5, 10.0))
        u_after = Allocator(P, AllocationWeights(tuple(sigma)))(w)
        assert abs(u_after[j]) <= abs(u_before[j]) + 1e-12


def test_weight_validation():
    with pytest.raises(ValueError):
        AllocationWeights((1.0,) * 7)
    with pytest.raises(ValueError):
        AllocationWeights((1.0,) * 7 + (0.0,))


def test_extreme_weight_ratio_reported_infeasible():
    sigma = (1e-16, 1e16) * 4
    with pytest.raises(AllocationInfeasibleError):
        Allocator(P, AllocationWeights(sigma))


def test_negative_thrust_report():
    assert negative_thrusts(np.array([-0.1, 0, 0, 0, 5.0, 0, 0, 0])) == [0]
    assert negative_thrusts(np.array([1.0, 0, 0, 0, -2.0, 0, 0, 0])) == [1]
    assert negative_thrusts(np.ones(8)) == []


ROTOR = RotorModel()


def test_zero_command_zero_speeds():
    assert np.allclose(rotor_speeds(0.0, (0.0, 0.0, 0.0), ROTOR), 0.0)


def test_pure_thrust_spins_all_rotors_equally():
    omega0 = 400.0
    thrust = 4.0 * ROTOR.thrust_coeff * omega0**2
    speeds = rotor_speeds(thrust, (0.0, 0.0, 0.0), ROTOR)
    assert np.allclose(speeds, omega0, atol=1e-9)


def test_rotor_map_round_trip():
    rng = np.random.default_rng(31)
    for _ in range(200):
        speeds = rng.uniform(50, 900, 4)
        thrust, moments = rotor_wrench(speeds, ROTOR)
        back = rotor_speeds(thrust, moments, ROTOR)
        assert np.allclose(back, speeds, atol=1e-9)
        t2, m2 = rotor_wrench(back, ROTOR)
        assert t2 == pytest.approx(thrust, abs=1e-9)
        assert np.allclose(m2, moments, atol=1e-9)


def test_negative_rotor_thrust_names_the_rotor():
    # a large pitch moment at low thrust starves rotor 0
    with pytest.raises(RotorSaturationError) as exc:
        rotor_thrusts(0.5, (0.0, 1.0, 0.0), ROTOR)
    assert exc.value.rotor_index == 0
    with pytest.raises(RotorSaturationError) as exc:
        rotor_thrusts(0.5, (-1.0, 0.0, 0.0), ROTOR)
    assert exc.value.rotor_index == 1
