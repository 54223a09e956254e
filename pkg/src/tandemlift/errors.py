"""Exception types raised by the simulator and controllers."""

from __future__ import annotations

import numpy as np


class TandemliftError(Exception):
    """Base class for all package errors."""


class NonFiniteInputError(TandemliftError):
    """An input to the plant contained NaN or infinity."""


class DivergedError(TandemliftError):
    """Roll or pitch exceeded the configured safety bound.

    The small-angle plant model is meaningless past the bound, so the run
    is aborted instead of integrating garbage.  Carries the offending state.
    """

    def __init__(self, t: float, eta, limit_rad: float):
        self.t = float(t)
        self.eta = np.asarray(eta, dtype=float)
        self.limit_rad = float(limit_rad)
        super().__init__(
            f"attitude exceeded safety bound of {limit_rad:.4f} rad at t={t:.4f} s "
            f"(phi={self.eta[6]:.4f}, theta={self.eta[8]:.4f})"
        )


class AllocationInfeasibleError(TandemliftError):
    """The actuator-effectiveness matrix cannot realize the requested wrench."""


class RotorSaturationError(TandemliftError):
    """A per-rotor thrust came out negative when inverting the rotor map."""

    def __init__(self, rotor_index: int, thrust_n: float):
        self.rotor_index = int(rotor_index)
        self.thrust_n = float(thrust_n)
        super().__init__(
            f"rotor {rotor_index} requires negative thrust {thrust_n:.6g} N"
        )


class ThrustSingularityError(TandemliftError):
    """The vertical virtual control would require non-positive total thrust."""


class ScenarioError(TandemliftError):
    """A scenario file or dict failed validation."""
