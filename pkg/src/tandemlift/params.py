"""Physical constants of the composite two-quadrotor + payload vehicle.

The default values describe the benchmark vehicle used throughout the test
suite: two 1.4 kg quadrotors rigidly bolted to the ends of a 2.2 m beam
carrying a 0.45 kg payload, with isotropic linear/rotational drag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SystemParams:
    """Mass, geometry, and drag properties of the rigidly-connected system.

    The two quadrotors sit symmetrically on the body y-axis at +/- half the
    payload length, so the attachment offsets always satisfy rho1 == -rho2.
    ``total_mass_kg`` is derived, never stored, which keeps the mass budget
    consistent by construction.
    """

    quad_mass_kg: float = 1.4
    payload_mass_kg: float = 0.45
    arm_length_m: float = 0.225
    payload_length_m: float = 2.2
    gravity_mps2: float = 9.81
    inertia_kgm2: tuple[float, float, float] = (3.039, 0.051, 3.072)
    linear_drag_nspm: float = 55e-4
    angular_drag_nms: float = 55e-4
    # Offset of quadrotor 1 from the composite CoM, body frame.  None means
    # "on the +y beam end", i.e. (0, payload_length/2, 0).
    attach_offset_m: tuple[float, float, float] | None = None

    def __post_init__(self):
        for name in ("quad_mass_kg", "payload_mass_kg", "arm_length_m",
                     "payload_length_m", "gravity_mps2",
                     "linear_drag_nspm", "angular_drag_nms"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
        if self.quad_mass_kg <= 0 or self.payload_mass_kg <= 0:
            raise ValueError("masses must be strictly positive")
        if self.arm_length_m <= 0 or self.payload_length_m <= 0:
            raise ValueError("geometry lengths must be strictly positive")
        if self.linear_drag_nspm <= 0 or self.angular_drag_nms <= 0:
            raise ValueError("drag coefficients must be strictly positive")
        if any(i <= 0 or not math.isfinite(i) for i in self.inertia_kgm2):
            raise ValueError("inertia diagonal must be strictly positive")
        if self.attach_offset_m is not None:
            if len(self.attach_offset_m) != 3:
                raise ValueError("attach_offset_m must be a 3-vector")
            if not all(math.isfinite(v) for v in self.attach_offset_m):
                raise ValueError("attach_offset_m must be finite")

    @property
    def total_mass_kg(self) -> float:
        """Composite mass: both quadrotors plus the payload."""
        return 2.0 * self.quad_mass_kg + self.payload_mass_kg

    @property
    def attach_offsets(self) -> tuple[np.ndarray, np.ndarray]:
        """Body-frame offsets (rho1, rho2) of the two quadrotors, rho1 == -rho2."""
        if self.attach_offset_m is None:
            rho1 = np.array([0.0, 0.5 * self.payload_length_m, 0.0])
        else:
            rho1 = np.asarray(self.attach_offset_m, dtype=float)
        return rho1, -rho1

    def hover_thrust_n(self) -> float:
        """Thrust that exactly balances gravity for the composite vehicle."""
        return self.total_mass_kg * self.gravity_mps2


@dataclass(frozen=True)
class RotorModel:
    """Per-rotor thrust/moment coefficients and the quadrotor arm length.

    The coefficient defaults are representative values for a small rotor and
    only matter when converting per-quadrotor wrenches to rotor speeds; every
    correctness contract in this package is expressed at the wrench level.
    """

    thrust_coeff: float = 8.55e-6   # N s^2 / rad^2
    moment_coeff: float = 1.6e-7    # N m s^2 / rad^2
    arm_length_m: float = 0.225

    def __post_init__(self):
        if self.thrust_coeff <= 0 or self.moment_coeff <= 0 or self.arm_length_m <= 0:
            raise ValueError("rotor coefficients and arm length must be positive")
