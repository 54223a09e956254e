"""Human-guidance layer: measured force to reference trajectory.

A virtual mass-damper-spring integrates the gated interaction force into a
reference position/velocity/acceleration for the position loop.  With zero
virtual stiffness the vehicle complies fully with the applied force; when
the force gate closes the reference freezes so the vehicle holds position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


def _as_triple(value, name: str) -> tuple[float, float, float]:
    if np.isscalar(value):
        v = float(value)
        return (v, v, v)
    t = tuple(float(x) for x in value)
    if len(t) != 3:
        raise ValueError(f"{name} must be a scalar or 3-vector")
    return t


@dataclass(frozen=True)
class AdmittanceParams:
    """Virtual mass/damping/stiffness (diagonal, per world axis) and gating.

    The gate opens when the measured force magnitude exceeds
    ``force_threshold_n`` and re-closes only below ``release_fraction`` of
    it, preventing chatter at the boundary.
    """

    virtual_mass_kg: tuple[float, float, float] = (0.95, 0.95, 0.95)
    damping_nspm: tuple[float, float, float] = (1.54, 1.54, 1.54)
    stiffness_npm: tuple[float, float, float] = (0.0, 0.0, 0.0)
    force_threshold_n: float = 0.5
    release_fraction: float = 0.9

    def __post_init__(self):
        object.__setattr__(self, "virtual_mass_kg",
                           _as_triple(self.virtual_mass_kg, "virtual_mass_kg"))
        object.__setattr__(self, "damping_nspm",
                           _as_triple(self.damping_nspm, "damping_nspm"))
        object.__setattr__(self, "stiffness_npm",
                           _as_triple(self.stiffness_npm, "stiffness_npm"))
        if any(m <= 0 for m in self.virtual_mass_kg):
            raise ValueError("virtual mass must be strictly positive")
        if any(c <= 0 for c in self.damping_nspm):
            raise ValueError("virtual damping must be strictly positive")
        if any(k < 0 for k in self.stiffness_npm):
            raise ValueError("virtual stiffness cannot be negative")
        if self.force_threshold_n < 0:
            raise ValueError("force threshold cannot be negative")
        if not 0.0 < self.release_fraction <= 1.0:
            raise ValueError("release fraction must be in (0, 1]")


class ReferenceTrajectory(NamedTuple):
    """Reference position, velocity, acceleration, and yaw for the outer loop."""

    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    yaw: float


class MeasuredWrench(NamedTuple):
    """Summed interaction force plus the two simulated sensor channels."""

    total: np.ndarray
    channels: np.ndarray  # shape (2, 3)


def gate(force, params: AdmittanceParams,
         was_open: bool = False) -> tuple[np.ndarray, bool]:
    """Threshold gate with release hysteresis.

    Passes the force through once its magnitude exceeds the threshold and
    keeps passing it until the magnitude falls below
    ``release_fraction * threshold``; otherwise returns the zero vector.
    """
    f = np.asarray(force, dtype=float)
    magnitude = float(np.linalg.norm(f))
    if was_open:
        is_open = magnitude >= params.release_fraction * params.force_threshold_n
    else:
        is_open = magnitude > params.force_threshold_n
    return (f if is_open else np.zeros(3)), is_open


def split_measurement(applied_force, noise_std_n: float = 0.0,
                      rng: np.random.Generator | None = None) -> MeasuredWrench:
    """Simulate the two attachment-point force sensors.

    Each channel reports half the applied force plus optional zero-mean
    Gaussian noise of the given per-channel standard deviation; the summed
    measurement is what the guidance layer consumes.
    """
    f = np.asarray(applied_force, dtype=float)
    channels = np.vstack([0.5 * f, 0.5 * f])
    if noise_std_n > 0.0:
        if rng is None:
            raise ValueError("a seeded Generator is required when noise is enabled")
        channels = channels + rng.normal(0.0, noise_std_n, size=(2, 3))
    return MeasuredWrench(channels[0] + channels[1], channels)


class AdmittanceFilter:
    """Virtual mass-damper-spring driven by the gated interaction force.

    Integrated with semi-implicit Euler at the position-loop rate.  The gate
    simply zeroes the driving force, so on release the reference coasts to
    rest under the virtual damping (time constant M/C) instead of stopping
    discontinuously; a discontinuous reference velocity would slam the
    position loop's thrust extraction into its singularity.  While the gate
    is closed the spring anchor is rebased to the current reference, so the
    vehicle holds wherever the reference comes to rest.
    """

    def __init__(self, params: AdmittanceParams, initial_position,
                 yaw: float = 0.0):
        self.params = params
        self.position = np.asarray(initial_position, dtype=float).copy()
        self.velocity = np.zeros(3)
        self.acceleration = np.zeros(3)
        self.anchor = self.position.copy()
        self.yaw = float(yaw)
        self.last_gated = np.zeros(3)
        self._open = False

    @property
    def gate_open(self) -> bool:
        return self._open

    def reference(self) -> ReferenceTrajectory:
        return ReferenceTrajectory(self.position.copy(), self.velocity.copy(),
                                   self.acceleration.copy(), self.yaw)

    # below this speed the coasting reference snaps to an exact standstill
    REST_SPEED_MPS = 1e-6

    def step(self, measured_force, dt: float) -> ReferenceTrajectory:
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        gated, now_open = gate(measured_force, self.params, self._open)
        self.last_gated = gated
        if not now_open:
            self.anchor = self.position.copy()
        moving = bool(np.any(self.velocity != 0.0))
        if now_open or moving:
            mass = np.asarray(self.params.virtual_mass_kg)
            damping = np.asarray(self.params.damping_nspm)
            stiffness = np.asarray(self.params.stiffness_npm)
            self.acceleration = (
                gated - damping * self.velocity
                - stiffness * (self.position - self.anchor)
            ) / mass
            self.velocity = self.velocity + dt * self.acceleration
            self.position = self.position + dt * self.velocity
            if (not now_open
                    and float(np.linalg.norm(self.velocity)) < self.REST_SPEED_MPS):
                self.velocity = np.zeros(3)
                self.acceleration = np.zeros(3)
                self.anchor = self.position.copy()
        self._open = now_open
        return self.reference()


def terminal_velocity(force, params: AdmittanceParams) -> np.ndarray:
    """Steady-state reference velocity under a constant gated force (K = 0)."""
    if any(k != 0 for k in params.stiffness_npm):
        raise ValueError("terminal velocity only exists with zero stiffness")
    return np.asarray(force, dtype=float) / np.asarray(params.damping_nspm)


def static_deflection(force, params: AdmittanceParams) -> np.ndarray:
    """Steady-state displacement from the anchor under a constant force (K > 0)."""
    stiffness = np.asarray(params.stiffness_npm)
    if np.any(stiffness <= 0):
        raise ValueError("static deflection requires positive stiffness")
    return np.asarray(force, dtype=float) / stiffness


def settle_time_s(params: AdmittanceParams, axis: int = 0,
                  time_constants: float = 5.0) -> float:
    """Multiple of the virtual time constant M/C for one axis."""
    return time_constants * params.virtual_mass_kg[axis] / params.damping_nspm[axis]


def is_finite_force(force, limit_n: float = math.inf) -> bool:
    f = np.asarray(force, dtype=float)
    return bool(np.all(np.isfinite(f)) and np.linalg.norm(f) <= limit_n)
