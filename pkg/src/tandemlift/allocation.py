"""Distributing the total wrench across the two quadrotors' actuators.

The composite controller produces a single wrench (thrust + three moments);
each quadrotor contributes its own thrust and three rotor moments, giving
eight actuator inputs for four equations.  The slack is resolved by
minimizing a weighted quadratic effort, whose closed-form solution is a
weighted pseudo-inverse.  A second map inverts the per-quadrotor rotor
geometry to recover the four rotor speeds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AllocationInfeasibleError, RotorSaturationError
from .params import RotorModel, SystemParams

ACTUATOR_LABELS = (
    "f1_n", "tau1x_nm", "tau1y_nm", "tau1z_nm",
    "f2_n", "tau2x_nm", "tau2y_nm", "tau2z_nm",
)


@dataclass(frozen=True)
class AllocationWeights:
    """Positive effort-cost coefficients, one per actuator channel."""

    sigma: tuple[float, ...] = (1.0,) * 8

    def __post_init__(self):
        if len(self.sigma) != 8:
            raise ValueError("exactly eight weight coefficients required")
        if any(s <= 0 for s in self.sigma):
            raise ValueError("all weight coefficients must be strictly positive")


def wrench_matrix(params: SystemParams) -> np.ndarray:
    """4x8 map from per-quadrotor actuator inputs to the composite wrench.

    Row 0 sums the two thrusts; row 1 (roll) combines the thrust moment arms
    about the body x-axis with the per-quadrotor roll moments; row 2 (pitch)
    likewise with the negated x-offsets; row 3 sums the yaw moments.
    """
    rho1, rho2 = params.attach_offsets
    lam = np.zeros((4, 8))
    lam[0, 0] = lam[0, 4] = 1.0
    lam[1, 0], lam[1, 1], lam[1, 4], lam[1, 5] = rho1[1], 1.0, rho2[1], 1.0
    lam[2, 0], lam[2, 2], lam[2, 4], lam[2, 6] = -rho1[0], 1.0, -rho2[0], 1.0
    lam[3, 3] = lam[3, 7] = 1.0
    return lam


class Allocator:
    """Minimum-weighted-effort wrench distribution, precomputed per geometry.

    Solves ``argmin ||Gamma u||_2  subject to  Lambda u = w`` where Gamma is
    the square root of the diagonal weight matrix; the solution is
    ``u* = Gamma^-2 Lambda^T (Lambda Gamma^-2 Lambda^T)^-1 w``.
    """

    def __init__(self, params: SystemParams,
                 weights: AllocationWeights | None = None):
        self.weights = weights or AllocationWeights()
        self.matrix = wrench_matrix(params)
        sigma = np.asarray(self.weights.sigma, dtype=float)
        gamma_inv2 = np.diag(1.0 / sigma)
        gram = self.matrix @ gamma_inv2 @ self.matrix.T
        if np.linalg.matrix_rank(self.matrix) < 4 or (
                np.linalg.cond(gram) > 1e12):
            raise AllocationInfeasibleError(
                "actuator-effectiveness matrix is rank deficient for this geometry")
        self._solution_map = gamma_inv2 @ self.matrix.T @ np.linalg.inv(gram)

    def __call__(self, wrench) -> np.ndarray:
        """Actuator 8-vector [F_q1, tau1(3), F_q2, tau2(3)] realizing the wrench."""
        w = np.asarray(
            [wrench[0], *np.ravel(wrench[1])] if len(wrench) == 2 else wrench,
            dtype=float,
        )
        return self._solution_map @ w

    def apply(self, w4: np.ndarray) -> np.ndarray:
        """Same as __call__ for a ready-made 4-array (hot-loop path)."""
        return self._solution_map @ w4

    def residual(self, wrench, u8) -> float:
        w = np.asarray(
            [wrench[0], *np.ravel(wrench[1])] if len(wrench) == 2 else wrench,
            dtype=float,
        )
        return float(np.linalg.norm(self.matrix @ u8 - w))


def negative_thrusts(u8) -> list[int]:
    """Quadrotor indices (0-based) whose allocated thrust came out negative."""
    return [i for i, idx in enumerate((0, 4)) if u8[idx] < 0.0]


def _rotor_map(rotor: RotorModel) -> np.ndarray:
    """4x4 map from the four rotor thrusts to (thrust, roll, pitch, yaw)."""
    d = rotor.arm_length_m
    ratio = rotor.moment_coeff / rotor.thrust_coeff
    return np.array([
        [1.0, 1.0, 1.0, 1.0],
        [0.0, d, 0.0, -d],
        [-d, 0.0, d, 0.0],
        [ratio, -ratio, ratio, -ratio],
    ])


def rotor_thrusts(thrust_n: float, moments_nm, rotor: RotorModel) -> np.ndarray:
    """Invert the rotor geometry: per-rotor thrusts realizing (F, tau).

    Raises RotorSaturationError naming the first rotor whose implied thrust
    is negative (the model cannot command reverse thrust).
    """
    d = rotor.arm_length_m
    ratio = rotor.thrust_coeff / rotor.moment_coeff
    t1, t2, t3 = (float(m) for m in moments_nm)
    half_even = 0.5 * (thrust_n + t3 * ratio)   # rotors 1 and 3
    half_odd = 0.5 * (thrust_n - t3 * ratio)    # rotors 2 and 4
    thrusts = np.array([
        0.5 * half_even - 0.5 * t2 / d,
        0.5 * half_odd + 0.5 * t1 / d,
        0.5 * half_even + 0.5 * t2 / d,
        0.5 * half_odd - 0.5 * t1 / d,
    ])
    for i, f in enumerate(thrusts):
        if f < 0.0:
            raise RotorSaturationError(i, f)
    return thrusts


def rotor_speeds(thrust_n: float, moments_nm, rotor: RotorModel) -> np.ndarray:
    """Rotor angular speeds (rad/s) realizing a per-quadrotor wrench."""
    return np.sqrt(rotor_thrusts(thrust_n, moments_nm, rotor) / rotor.thrust_coeff)


def rotor_wrench(speeds, rotor: RotorModel) -> tuple[float, np.ndarray]:
    """Forward rotor map: thrust and moments produced by four rotor speeds."""
    w2 = np.asarray(speeds, dtype=float) ** 2
    out = _rotor_map(rotor) @ (rotor.thrust_coeff * w2)
    return float(out[0]), out[1:4]
