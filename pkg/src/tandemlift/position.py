"""Outer-loop position control: adaptive backstepping.

Converts the admittance reference trajectory into a total thrust and the
desired roll/pitch angles.  The cascade introduces a temporary velocity
target ``K_p * E_p + Xd_dot``; the velocity-level error feeds both the
virtual-control law and a square-law gain adaptation, so the adapted gains
can only grow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .admittance import ReferenceTrajectory
from .dynamics import SimState
from .errors import ThrustSingularityError
from .params import SystemParams


@dataclass(frozen=True)
class PositionGains:
    """Proportional position gains and adaptation rates, per world axis."""

    kp: tuple[float, float, float] = (18.0, 9.0, 18.0)
    beta: tuple[float, float, float] = (0.4, 0.4, 0.4)

    def __post_init__(self):
        if any(k <= 0 for k in self.kp) or any(b <= 0 for b in self.beta):
            raise ValueError("position gains and adaptation rates must be positive")


@dataclass
class AdaptiveState:
    """Adapted velocity-loop gains; grows monotonically by the square law."""

    khat: np.ndarray
    t_last: float = 0.0

    def __post_init__(self):
        self.khat = np.asarray(self.khat, dtype=float)

    @classmethod
    def zero(cls) -> "AdaptiveState":
        return cls(np.zeros(3))


class PositionError(NamedTuple):
    e_p: np.ndarray   # reference minus actual position, m
    e_v: np.ndarray   # temporary velocity target minus actual velocity, m/s


def position_errors(ref: ReferenceTrajectory, state: SimState,
                    gains: PositionGains) -> PositionError:
    """Position error and velocity-level error of the backstepping cascade."""
    kp = np.asarray(gains.kp)
    e_p = ref.position - state.position
    x_temp = kp * e_p + ref.velocity
    return PositionError(e_p, x_temp - state.velocity)


def update_adaptation(adapt: AdaptiveState, err: PositionError,
                      gains: PositionGains, dt: float) -> AdaptiveState:
    """Explicit-Euler step of the square-law gain adaptation (never decreases)."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    beta = np.asarray(gains.beta)
    return AdaptiveState(adapt.khat + dt * beta * err.e_v**2, adapt.t_last + dt)


def virtual_controls(err: PositionError, ep_dot: np.ndarray,
                     adapt: AdaptiveState, ref: ReferenceTrajectory,
                     state: SimState, params: SystemParams,
                     gains: PositionGains) -> np.ndarray:
    """Per-axis virtual acceleration commands of the position subsystem.

    The final term cancels the plant's linear-drag acceleration so the
    closed velocity loop sees a pure integrator.
    """
    kp = np.asarray(gains.kp)
    drag_accel = -params.linear_drag_nspm * state.velocity / params.total_mass_kg
    return (-err.e_p + adapt.khat * err.e_v + kp * ep_dot
            + ref.acceleration - drag_accel)


def thrust_attitude(u_v: np.ndarray, yaw_d: float,
                    params: SystemParams) -> tuple[float, float, float]:
    """Total thrust and desired roll/pitch realizing the virtual controls.

    Requires ``u_vz + g > 0`` (the thrust vector must keep an upward
    component); otherwise raises ThrustSingularityError.
    """
    uvx, uvy, uvz = (float(v) for v in u_v)
    g = params.gravity_mps2
    denom = uvz + g
    if denom <= 0.0:
        raise ThrustSingularityError(
            f"vertical virtual control {uvz:.4g} cancels gravity; thrust undefined")
    thrust = params.total_mass_kg * math.sqrt(uvx * uvx + uvy * uvy + denom * denom)
    sps, cps = math.sin(yaw_d), math.cos(yaw_d)
    theta_d = math.atan((uvx * cps + uvy * sps) / denom)
    phi_d = math.atan(math.cos(theta_d) * (uvx * sps - uvy * cps) / denom)
    return thrust, phi_d, theta_d


class PositionOutput(NamedTuple):
    thrust_n: float
    phi_d: float
    theta_d: float
    e_p: np.ndarray
    e_v: np.ndarray
    khat: np.ndarray
    singular: bool


class PositionController:
    """Stateful wrapper stepped by the simulation loop at the position rate.

    Holds the adapted gains and the last valid output; on a thrust
    singularity the previous output is held and the event is flagged for
    the caller to log.
    """

    def __init__(self, gains: PositionGains, params: SystemParams,
                 initial_khat=None):
        self.gains = gains
        self.params = params
        self.adapt = AdaptiveState(
            np.zeros(3) if initial_khat is None else np.asarray(initial_khat, float))
        self._held = (params.hover_thrust_n(), 0.0, 0.0)

    def step(self, ref: ReferenceTrajectory, state: SimState, dt: float,
             adapt_enabled: bool = True) -> PositionOutput:
        err = position_errors(ref, state, self.gains)
        ep_dot = ref.velocity - state.velocity
        if adapt_enabled:
            self.adapt = update_adaptation(self.adapt, err, self.gains, dt)
        u_v = virtual_controls(err, ep_dot, self.adapt, ref, state,
                               self.params, self.gains)
        try:
            self._held = thrust_attitude(u_v, ref.yaw, self.params)
            singular = False
        except ThrustSingularityError:
            singular = True
        thrust, phi_d, theta_d = self._held
        return PositionOutput(thrust, phi_d, theta_d, err.e_p, err.e_v,
                              self.adapt.khat.copy(), singular)
