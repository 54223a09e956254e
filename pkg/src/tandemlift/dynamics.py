"""Ground-truth plant for the rigidly-connected two-quadrotor payload system.

State vector (12 entries, SI units / radians):

    eta = [x, xdot, y, ydot, z, zdot,
           phi, phidot, theta, thetadot, psi, psidot]

The model is the small-angle Euler-rate form of the composite rigid body:
translational acceleration from the tilted total thrust minus isotropic
linear drag, rotational acceleration from the body moments with gyroscopic
coupling and isotropic rotational drag.  An external (human) force acts on
the composite CoM in the world frame and produces no torque.

The integrator is fixed-step classical RK4 with the wrench and external
force held constant across the step, which makes runs bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DivergedError, NonFiniteInputError
from .params import SystemParams

# Roll/pitch magnitude beyond which the small-angle model is declared invalid.
ATTITUDE_LIMIT_RAD = math.pi / 3.0

# World-frame saturation applied to external (human) forces, N.
EXTERNAL_FORCE_LIMIT_N = 50.0

STATE_LABELS = (
    "x_m", "xdot_mps", "y_m", "ydot_mps", "z_m", "zdot_mps",
    "phi_rad", "phidot_radps", "theta_rad", "thetadot_radps",
    "psi_rad", "psidot_radps",
)


class WrenchCommand(NamedTuple):
    """Total thrust along the body z-axis plus the three body moments."""

    thrust_n: float
    moments_nm: tuple[float, float, float]


@dataclass
class SimState:
    """Simulation clock plus the 12-entry state vector."""

    t: float
    eta: np.ndarray

    def __post_init__(self):
        self.eta = np.asarray(self.eta, dtype=float)
        if self.eta.shape != (12,):
            raise ValueError(f"state vector must have 12 entries, got {self.eta.shape}")

    @property
    def position(self) -> np.ndarray:
        return self.eta[0:6:2]

    @property
    def velocity(self) -> np.ndarray:
        return self.eta[1:6:2]

    @property
    def attitude(self) -> np.ndarray:
        return self.eta[6:12:2]

    @property
    def rates(self) -> np.ndarray:
        return self.eta[7:12:2]

    def copy(self) -> "SimState":
        return SimState(self.t, self.eta.copy())


def hover_state(z_m: float = 0.0) -> SimState:
    """Level, motionless state at the given altitude."""
    eta = np.zeros(12)
    eta[4] = z_m
    return SimState(0.0, eta)


def hover_wrench(params: SystemParams) -> WrenchCommand:
    """Wrench that holds the hover state exactly: weight up, no moments."""
    return WrenchCommand(params.hover_thrust_n(), (0.0, 0.0, 0.0))


def thrust_direction(phi: float, theta: float, psi: float) -> tuple[float, float, float]:
    """World-frame direction the total thrust acts along for this model."""
    sph, cph = math.sin(phi), math.cos(phi)
    sth, cth = math.sin(theta), math.cos(theta)
    sps, cps = math.sin(psi), math.cos(psi)
    return (
        sth * cps + sph * cth * sps,
        sth * sps - sph * cth * cps,
        cph * cth,
    )


def _constants(params: SystemParams) -> tuple:
    """Precompute the per-run scalar constants used by the derivative."""
    isx, isy, isz = params.inertia_kgm2
    return (
        1.0 / params.total_mass_kg,
        params.total_mass_kg * params.gravity_mps2,
        params.linear_drag_nspm,
        params.angular_drag_nms,
        1.0 / isx, 1.0 / isy, 1.0 / isz,
        isy - isz, isz - isx, isx - isy,
    )


def _deriv(eta, uth, um1, um2, um3, fx, fy, fz, c):
    """Twelve-entry state derivative on plain floats (hot path)."""
    (inv_ms, weight, kdl, kdr,
     inv_ix, inv_iy, inv_iz, gyro_x, gyro_y, gyro_z) = c
    vx, vy, vz = eta[1], eta[3], eta[5]
    phi, p = eta[6], eta[7]
    theta, q = eta[8], eta[9]
    psi, r = eta[10], eta[11]

    sph, cph = math.sin(phi), math.cos(phi)
    sth, cth = math.sin(theta), math.cos(theta)
    sps, cps = math.sin(psi), math.cos(psi)

    return (
        vx,
        (-kdl * vx + (sth * cps + sph * cth * sps) * uth + fx) * inv_ms,
        vy,
        (-kdl * vy + (sth * sps - sph * cth * cps) * uth + fy) * inv_ms,
        vz,
        (-kdl * vz - weight + (cph * cth) * uth + fz) * inv_ms,
        p,
        (-kdr * p + gyro_x * q * r + um1) * inv_ix,
        q,
        (-kdr * q + gyro_y * p * r + um2) * inv_iy,
        r,
        (-kdr * r + gyro_z * p * q + um3) * inv_iz,
    )


def _rk4(eta, uth, um1, um2, um3, fx, fy, fz, dt, c):
    """One classical RK4 step on a 12-tuple with inputs held constant."""
    half = 0.5 * dt
    k1 = _deriv(eta, uth, um1, um2, um3, fx, fy, fz, c)
    e2 = tuple(a + half * b for a, b in zip(eta, k1))
    k2 = _deriv(e2, uth, um1, um2, um3, fx, fy, fz, c)
    e3 = tuple(a + half * b for a, b in zip(eta, k2))
    k3 = _deriv(e3, uth, um1, um2, um3, fx, fy, fz, c)
    e4 = tuple(a + dt * b for a, b in zip(eta, k3))
    k4 = _deriv(e4, uth, um1, um2, um3, fx, fy, fz, c)
    sixth = dt / 6.0
    return tuple(
        a + sixth * (b1 + 2.0 * (b2 + b3) + b4)
        for a, b1, b2, b3, b4 in zip(eta, k1, k2, k3, k4)
    )


def _check_inputs(wrench: WrenchCommand, ext_force) -> tuple:
    uth = float(wrench.thrust_n)
    um1, um2, um3 = (float(m) for m in wrench.moments_nm)
    fx, fy, fz = (float(v) for v in ext_force)
    if not all(map(math.isfinite, (uth, um1, um2, um3, fx, fy, fz))):
        raise NonFiniteInputError("wrench or external force contains non-finite values")
    if uth < 0.0:
        raise NonFiniteInputError(f"total thrust must be non-negative, got {uth}")
    return uth, um1, um2, um3, fx, fy, fz


def state_derivative(
    state: SimState,
    wrench: WrenchCommand,
    ext_force,
    params: SystemParams,
) -> np.ndarray:
    """Continuous-time derivative of the 12-entry state vector.

    ``ext_force`` is the world-frame external force on the composite CoM
    (a 3-vector in newtons); it enters the three translational acceleration
    rows divided by the total mass and nowhere else.
    """
    eta = np.asarray(state.eta, dtype=float)
    if not np.all(np.isfinite(eta)):
        raise NonFiniteInputError("state vector contains non-finite values")
    inputs = _check_inputs(wrench, ext_force)
    return np.array(_deriv(tuple(eta), *inputs, _constants(params)))


def check_attitude(eta, t: float, limit_rad: float = ATTITUDE_LIMIT_RAD) -> None:
    """Raise DivergedError if roll/pitch exceed the bound or went non-finite."""
    phi, theta = eta[6], eta[8]
    if not (abs(phi) <= limit_rad and abs(theta) <= limit_rad):
        raise DivergedError(t, eta, limit_rad)
    if not all(map(math.isfinite, eta)):
        raise DivergedError(t, eta, limit_rad)


def rk4_step(
    state: SimState,
    wrench: WrenchCommand,
    ext_force,
    params: SystemParams,
    dt: float,
    attitude_limit_rad: float = ATTITUDE_LIMIT_RAD,
) -> SimState:
    """Advance the plant by one fixed RK4 step of length ``dt``.

    ``dt`` must lie in (0, 0.01] s; the wrench and external force are held
    constant over the step.  Raises DivergedError when the new state violates
    the roll/pitch safety bound.
    """
    if not (0.0 < dt <= 0.01):
        raise ValueError(f"dt must be in (0, 0.01] s, got {dt}")
    inputs = _check_inputs(wrench, ext_force)
    eta = tuple(float(v) for v in state.eta)
    if not all(map(math.isfinite, eta)):
        raise NonFiniteInputError("state vector contains non-finite values")
    new_eta = _rk4(eta, *inputs, dt, _constants(params))
    t_new = state.t + dt
    check_attitude(new_eta, t_new, attitude_limit_rad)
    return SimState(t_new, np.array(new_eta))


def interaction_wrenches(
    state: SimState,
    wrench: WrenchCommand,
    params: SystemParams,
    thrust_split: tuple[float, float] | None = None,
):
    """Forces and torques each quadrotor exerts on the payload (diagnostic).

    The rigid connection makes all three bodies share the composite
    translational acceleration and angular rates, and aerodynamic drag is
    apportioned by mass share, so the constraint force from quadrotor i
    reduces to ``(F_qi - (m_q/m_s) * U_th)`` along the thrust direction.
    Torques use the point-mass-quadrotor convention: the transmitted torque
    equals the rotor moment commanded on that quadrotor.

    ``thrust_split`` optionally fixes the per-quadrotor thrusts; by default
    the wrench is split with the uniform-weight allocator.

    Returns ``(f1, t1, f2, t2)`` as world-frame force / body-frame torque
    3-vectors.
    """
    from .allocation import Allocator

    if thrust_split is None:
        u8 = Allocator(params)(wrench)
        fq1, fq2 = u8[0], u8[4]
        tau1, tau2 = u8[1:4], u8[5:8]
    else:
        fq1, fq2 = thrust_split
        m = np.asarray(wrench.moments_nm, dtype=float)
        tau1 = tau2 = 0.5 * m

    phi, theta, psi = state.eta[6], state.eta[8], state.eta[10]
    n = np.array(thrust_direction(phi, theta, psi))
    share = params.quad_mass_kg / params.total_mass_kg
    f1 = (fq1 - share * wrench.thrust_n) * n
    f2 = (fq2 - share * wrench.thrust_n) * n
    return f1, np.asarray(tau1, dtype=float), f2, np.asarray(tau2, dtype=float)


def kinetic_energy(eta, params: SystemParams) -> float:
    """Translational plus rotational kinetic energy of the composite body."""
    isx, isy, isz = params.inertia_kgm2
    v2 = eta[1] ** 2 + eta[3] ** 2 + eta[5] ** 2
    return 0.5 * (
        params.total_mass_kg * v2
        + isx * eta[7] ** 2 + isy * eta[9] ** 2 + isz * eta[11] ** 2
    )
