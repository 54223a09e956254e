"""Inner-loop attitude control: fast nonsingular terminal sliding mode.

Each axis is driven onto a sliding surface that combines the attitude error,
its rate, and a power-law error term; a proportional-plus-switching reaching
law then guarantees the surface is hit in finite time with a computable
upper bound on the reaching time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dynamics import SimState
from .params import SystemParams


@dataclass(frozen=True)
class AttitudeGains:
    """Surface gains per axis plus the shared scalar reaching parameters.

    ``boundary_layer_rad`` = 0 selects the exact sign switching function;
    a positive value replaces it with a saturated linear band of that width
    to suppress chattering.
    """

    zeta: tuple[float, float, float] = (22.0, 30.0, 22.0)
    gamma: float = 5.0
    epsilon: float = 2.0
    kappa1: float = 85.0
    kappa2: float = 55.0
    boundary_layer_rad: float = 0.0

    def __post_init__(self):
        if any(z <= 0 for z in self.zeta):
            raise ValueError("surface gains must be positive")
        if self.gamma <= 0 or self.kappa1 <= 0 or self.kappa2 <= 0:
            raise ValueError("gamma and reaching gains must be positive")
        if self.epsilon < 1:
            raise ValueError("surface exponent must be >= 1")
        if self.boundary_layer_rad < 0:
            raise ValueError("boundary layer width cannot be negative")


class AttitudeOutput(NamedTuple):
    moments_nm: tuple[float, float, float]
    e_phi: tuple[float, float, float]
    e_phi_dot: tuple[float, float, float]
    s_phi: tuple[float, float, float]


def _signum(s: float) -> float:
    if s > 0.0:
        return 1.0
    if s < 0.0:
        return -1.0
    return 0.0


def _switch(s: float, delta: float) -> float:
    if delta == 0.0:
        return _signum(s)
    return min(1.0, max(-1.0, s / delta))


def _surface(e: float, edot: float, zeta: float, gamma: float, eps: float) -> float:
    return edot + zeta * e + gamma * math.copysign(abs(e) ** eps, e)


def sliding_surface(e_phi, e_phi_dot, gains: AttitudeGains) -> np.ndarray:
    """Surface values S = Edot + zeta*E + gamma*|E|^eps*sgn(E), per axis."""
    return np.array([
        _surface(float(e), float(ed), z, gains.gamma, gains.epsilon)
        for e, ed, z in zip(e_phi, e_phi_dot, gains.zeta)
    ])


def _drag_gyro_accel(eta, params: SystemParams) -> tuple[float, float, float]:
    """Angular acceleration from drag and gyroscopic coupling, per axis."""
    p, q, r = eta[7], eta[9], eta[11]
    isx, isy, isz = params.inertia_kgm2
    kdr = params.angular_drag_nms
    return (
        (-kdr * p + (isy - isz) * q * r) / isx,
        (-kdr * q + (isz - isx) * p * r) / isy,
        (-kdr * r + (isx - isy) * p * q) / isz,
    )


def _axis_moment(inertia, ref_acc, qphi, e, edot, zeta, gains) -> tuple[float, float]:
    """Surface value and control moment for one axis."""
    s = _surface(e, edot, zeta, gains.gamma, gains.epsilon)
    grad = zeta + gains.gamma * gains.epsilon * abs(e) ** (gains.epsilon - 1.0)
    moment = inertia * (
        ref_acc - qphi + grad * edot
        + gains.kappa1 * s
        + gains.kappa2 * _switch(s, gains.boundary_layer_rad)
    )
    return s, moment


def attitude_control(att_ref, att_ref_rate, att_ref_accel, state: SimState,
                     gains: AttitudeGains, params: SystemParams) -> np.ndarray:
    """Body moments tracking the desired attitude (roll, pitch, yaw).

    Cancels the drag/gyroscopic acceleration exactly and applies the
    reaching law on each axis's surface value.
    """
    eta = state.eta
    qphi = _drag_gyro_accel(eta, params)
    moments = np.empty(3)
    for i, inertia in enumerate(params.inertia_kgm2):
        e = float(att_ref[i]) - eta[6 + 2 * i]
        edot = float(att_ref_rate[i]) - eta[7 + 2 * i]
        _, moments[i] = _axis_moment(
            inertia, float(att_ref_accel[i]), qphi[i], e, edot,
            gains.zeta[i], gains)
    return moments


def reaching_time_bound(v0, gains: AttitudeGains) -> np.ndarray:
    """Upper bound on the time to reach the surface from Lyapunov value v0.

    t_r = (1/kappa1) * ln((2*kappa1*sqrt(v0) + alpha) / alpha),
    alpha = sqrt(2)*kappa2, elementwise over v0 >= 0.
    """
    v0 = np.asarray(v0, dtype=float)
    if np.any(v0 < 0):
        raise ValueError("initial Lyapunov values must be non-negative")
    alpha = math.sqrt(2.0) * gains.kappa2
    return np.log((2.0 * gains.kappa1 * np.sqrt(v0) + alpha) / alpha) / gains.kappa1


class DerivativeFilter:
    """Second-order low-pass differentiator for the desired attitude.

    Tracks an input signal with a critically damped second-order filter and
    exposes the filter's velocity and acceleration states as smoothed first
    and second derivatives.  Primed on the first sample so that a constant
    input yields exactly zero derivatives.
    """

    def __init__(self, cutoff_hz: float = 20.0, size: int = 3):
        self.omega = 2.0 * math.pi * cutoff_hz
        self._pos = [0.0] * size
        self._vel = [0.0] * size
        self._primed = False

    def reset(self, value) -> None:
        self._pos = [float(v) for v in value]
        self._vel = [0.0] * len(self._pos)
        self._primed = True

    def step(self, value, dt: float) -> tuple[tuple, tuple]:
        """Advance by dt; returns (first derivative, second derivative)."""
        if not self._primed:
            self.reset(value)
        w2 = self.omega * self.omega
        two_w = 2.0 * self.omega
        pos, vel = self._pos, self._vel
        acc = tuple(
            w2 * (float(u) - x) - two_w * v
            for u, x, v in zip(value, pos, vel)
        )
        for i, a in enumerate(acc):
            vel[i] += dt * a
            pos[i] += dt * vel[i]
        return tuple(vel), acc


class AttitudeController:
    """Stateful inner loop stepped every plant step.

    Owns the desired-attitude differentiator; everything else is the pure
    per-axis control law.
    """

    def __init__(self, gains: AttitudeGains, params: SystemParams,
                 derivative_cutoff_hz: float = 20.0):
        self.gains = gains
        self.params = params
        self.filter = DerivativeFilter(derivative_cutoff_hz)

    def step(self, phi_d: float, theta_d: float, psi_d: float,
             state: SimState, dt: float) -> AttitudeOutput:
        eta = state.eta
        ref = (phi_d, theta_d, psi_d)
        ref_rate, ref_acc = self.filter.step(ref, dt)
        qphi = _drag_gyro_accel(eta, self.params)
        gains = self.gains
        moments = []
        errs = []
        errdots = []
        surfaces = []
        for i, inertia in enumerate(self.params.inertia_kgm2):
            e = ref[i] - eta[6 + 2 * i]
            edot = ref_rate[i] - eta[7 + 2 * i]
            s, m = _axis_moment(inertia, ref_acc[i], qphi[i], e, edot,
                                gains.zeta[i], gains)
            moments.append(m)
            errs.append(e)
            errdots.append(edot)
            surfaces.append(s)
        return AttitudeOutput(tuple(moments), tuple(errs), tuple(errdots),
                              tuple(surfaces))
