"""Scenario definition and YAML loading.

A scenario bundles the physical parameters, controller gains, guidance
settings, the scripted force profile, and the run configuration.  Every
key in the file format carries its unit as a suffix (``duration_s``,
``quad_mass_kg``) because unit slips are the dominant failure mode in
control code.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import yaml

from .admittance import AdmittanceParams
from .attitude import AttitudeGains
from .dynamics import ATTITUDE_LIMIT_RAD, EXTERNAL_FORCE_LIMIT_N
from .errors import ScenarioError
from .params import RotorModel, SystemParams
from .position import PositionGains


@dataclass(frozen=True)
class ForceSegment:
    """Constant world-frame force applied over [t_start_s, t_end_s)."""

    t_start_s: float
    t_end_s: float
    force_n: tuple[float, float, float]

    def __post_init__(self):
        if not (0 <= self.t_start_s < self.t_end_s):
            raise ScenarioError(
                f"segment must satisfy 0 <= start < end, got [{self.t_start_s}, {self.t_end_s})")
        if len(self.force_n) != 3 or not all(math.isfinite(f) for f in self.force_n):
            raise ScenarioError("segment force must be a finite 3-vector")


@dataclass
class Scenario:
    name: str = "unnamed"
    duration_s: float = 10.0
    dt_s: float = 0.001
    seed: int = 0
    live_mode: bool = False
    sensor_noise_std_n: float = 0.0
    force_limit_n: float = EXTERNAL_FORCE_LIMIT_N
    attitude_limit_rad: float = ATTITUDE_LIMIT_RAD
    yaw_setpoint_rad: float = 0.0
    log_every_steps: int = 1
    system: SystemParams = field(default_factory=SystemParams)
    rotor: RotorModel = field(default_factory=RotorModel)
    position_gains: PositionGains = field(default_factory=PositionGains)
    attitude_gains: AttitudeGains = field(default_factory=AttitudeGains)
    admittance: AdmittanceParams = field(default_factory=AdmittanceParams)
    initial_position_m: tuple[float, float, float] = (0.0, 0.0, 0.0)
    initial_velocity_mps: tuple[float, float, float] = (0.0, 0.0, 0.0)
    initial_attitude_rad: tuple[float, float, float] = (0.0, 0.0, 0.0)
    initial_rates_radps: tuple[float, float, float] = (0.0, 0.0, 0.0)
    force_profile: tuple[ForceSegment, ...] = ()

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ScenarioError("duration_s must be positive")
        if not (0.0 < self.dt_s <= 0.01):
            raise ScenarioError(f"dt_s must be in (0, 0.01], got {self.dt_s}")
        if self.log_every_steps < 1:
            raise ScenarioError("log_every_steps must be >= 1")
        if self.sensor_noise_std_n < 0:
            raise ScenarioError("sensor_noise_std_n cannot be negative")
        segments = sorted(self.force_profile, key=lambda s: s.t_start_s)
        for a, b in zip(segments, segments[1:]):
            if b.t_start_s < a.t_end_s:
                raise ScenarioError(
                    f"force segments overlap: [{a.t_start_s},{a.t_end_s}) and "
                    f"[{b.t_start_s},{b.t_end_s})")
        for s in segments:
            if s.t_end_s > self.duration_s:
                raise ScenarioError(
                    f"segment ends at {s.t_end_s}s, past duration {self.duration_s}s")
            if np.linalg.norm(s.force_n) > self.force_limit_n:
                raise ScenarioError(
                    f"segment force exceeds the {self.force_limit_n} N limit")
        self.force_profile = tuple(segments)

    @property
    def n_steps(self) -> int:
        return round(self.duration_s / self.dt_s)

    def initial_eta(self) -> np.ndarray:
        eta = np.zeros(12)
        eta[0:6:2] = self.initial_position_m
        eta[1:6:2] = self.initial_velocity_mps
        eta[6:12:2] = self.initial_attitude_rad
        eta[7:12:2] = self.initial_rates_radps
        return eta

    def force_lookup(self):
        """Fast t -> applied force function over the sorted segments."""
        starts = [s.t_start_s for s in self.force_profile]
        segments = self.force_profile
        zero = (0.0, 0.0, 0.0)

        def lookup(t: float) -> tuple[float, float, float]:
            i = bisect_right(starts, t) - 1
            if i >= 0 and t < segments[i].t_end_s:
                return segments[i].force_n
            return zero

        return lookup


def _triple(value) -> tuple[float, float, float]:
    if np.isscalar(value):
        return (float(value),) * 3
    return tuple(float(v) for v in value)


def scenario_from_dict(raw: dict) -> Scenario:
    """Build a validated Scenario from a plain dict (parsed YAML)."""
    try:
        kwargs: dict = {}
        for key in ("name", "duration_s", "dt_s", "seed", "live_mode",
                    "sensor_noise_std_n", "force_limit_n", "attitude_limit_rad",
                    "yaw_setpoint_rad", "log_every_steps"):
            if key in raw:
                kwargs[key] = raw[key]
        if "system" in raw:
            sys_raw = dict(raw["system"])
            if "inertia_kgm2" in sys_raw:
                sys_raw["inertia_kgm2"] = tuple(float(v) for v in sys_raw["inertia_kgm2"])
            if "attach_offset_m" in sys_raw and sys_raw["attach_offset_m"] is not None:
                sys_raw["attach_offset_m"] = tuple(float(v) for v in sys_raw["attach_offset_m"])
            kwargs["system"] = SystemParams(**sys_raw)
        if "rotor" in raw:
            kwargs["rotor"] = RotorModel(**raw["rotor"])
        if "position_gains" in raw:
            g = raw["position_gains"]
            kwargs["position_gains"] = PositionGains(
                kp=_triple(g.get("kp", PositionGains().kp)),
                beta=_triple(g.get("beta", PositionGains().beta)))
        if "attitude_gains" in raw:
            g = dict(raw["attitude_gains"])
            if "zeta" in g:
                g["zeta"] = _triple(g["zeta"])
            kwargs["attitude_gains"] = AttitudeGains(**g)
        if "admittance" in raw:
            kwargs["admittance"] = AdmittanceParams(**raw["admittance"])
        init = raw.get("initial", {})
        for yaml_key, attr in (("position_m", "initial_position_m"),
                               ("velocity_mps", "initial_velocity_mps"),
                               ("attitude_rad", "initial_attitude_rad"),
                               ("rates_radps", "initial_rates_radps")):
            if yaml_key in init:
                kwargs[attr] = _triple(init[yaml_key])
        segments = tuple(
            ForceSegment(float(s["t_start_s"]), float(s["t_end_s"]),
                         tuple(float(f) for f in s["force_n"]))
            for s in raw.get("force_profile", ())
        )
        kwargs["force_profile"] = segments
        return Scenario(**kwargs)
    except ScenarioError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"invalid scenario: {exc}") from exc


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a YAML scenario file."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ScenarioError(f"{path} does not contain a scenario mapping")
    return scenario_from_dict(raw)


def lift_guide_land(duration_s: float = 32.0, seed: int = 7) -> Scenario:
    """Scripted end-to-end mission: lift to altitude, guide through a 3D
    path with forces in several directions, then set back down."""
    return Scenario(
        name="lift_guide_land",
        duration_s=duration_s,
        seed=seed,
        force_profile=(
            ForceSegment(1.0, 4.0, (0.0, 0.0, 2.0)),      # lift to ~3 m
            ForceSegment(6.0, 11.0, (1.8, 0.0, 0.0)),     # guide +x
            ForceSegment(13.0, 18.0, (0.0, 1.5, 0.0)),    # guide +y
            ForceSegment(20.0, 23.0, (-1.2, -0.9, 0.0)),  # diagonal return
            ForceSegment(24.5, 28.5, (0.0, 0.0, -1.5)),   # descend to ~0
        ),
    )


def hover(duration_s: float = 60.0, z_m: float = 0.0) -> Scenario:
    """No forces, start at rest: the closed loop must hold position."""
    return Scenario(name="hover", duration_s=duration_s,
                    initial_position_m=(0.0, 0.0, z_m))
