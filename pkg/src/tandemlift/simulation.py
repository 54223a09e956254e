"""Deterministic cascaded simulation loop, run logging, and metrics.

Loop structure per plant step (dt, default 1 ms):

* every 10th step: sensor simulation, force gate, admittance reference,
  position controller (thrust + desired roll/pitch), gain adaptation;
* every step: attitude controller and wrench allocation;
* plant advanced one RK4 step with the *applied* (not measured) force.

Scripted runs are bit-reproducible for a fixed scenario and seed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import dynamics
from .admittance import AdmittanceFilter, ReferenceTrajectory, split_measurement
from .allocation import Allocator
from .attitude import AttitudeController, reaching_time_bound
from .dynamics import SimState, WrenchCommand
from .errors import DivergedError
from .position import PositionController
from .scenario import Scenario

# The position/admittance loop runs exactly once every this many plant steps.
POSITION_DECIMATION = 10

# Vehicle counts as landed when within these margins of its initial altitude.
LANDED_ALTITUDE_M = 0.02
LANDED_SPEED_MPS = 0.02

LOG_COLUMNS = (
    ("t_s",)
    + dynamics.STATE_LABELS
    + ("ref_x_m", "ref_y_m", "ref_z_m",
       "ref_vx_mps", "ref_vy_mps", "ref_vz_mps",
       "ref_ax_mps2", "ref_ay_mps2", "ref_az_mps2", "ref_yaw_rad",
       "phi_d_rad", "theta_d_rad",
       "thrust_n", "mx_nm", "my_nm", "mz_nm",
       "act_f1_n", "act_tau1x_nm", "act_tau1y_nm", "act_tau1z_nm",
       "act_f2_n", "act_tau2x_nm", "act_tau2y_nm", "act_tau2z_nm",
       "ep_x_m", "ep_y_m", "ep_z_m",
       "ev_x_mps", "ev_y_mps", "ev_z_mps",
       "ephi_rad", "etheta_rad", "epsi_rad",
       "s_roll", "s_pitch", "s_yaw",
       "khat_x", "khat_y", "khat_z",
       "vpv_x", "vpv_y", "vpv_z",
       "vphi_roll", "vphi_pitch", "vphi_yaw",
       "fh_x_n", "fh_y_n", "fh_z_n",
       "fmeas_x_n", "fmeas_y_n", "fmeas_z_n",
       "fapp_x_n", "fapp_y_n", "fapp_z_n")
)
_COL = {name: i for i, name in enumerate(LOG_COLUMNS)}


@dataclass
class RunLog:
    """Uniformly sampled time series of one run plus its outcome.

    ``data`` has one row per logged step and the columns of LOG_COLUMNS.
    The adapted-gain Lyapunov columns (vpv_*) use the run's final adapted
    gains as the stand-in for the unknown true gains, so they can be
    recomputed from the logged rows alone.
    """

    scenario: Scenario
    data: np.ndarray
    status: str = "ok"
    final_state: SimState | None = None
    events: list = field(default_factory=list)
    event_counts: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return self.data[:, _COL[name]]

    def columns(self, *names: str) -> np.ndarray:
        return self.data[:, [_COL[n] for n in names]]

    @property
    def t(self) -> np.ndarray:
        return self.column("t_s")

    def to_csv(self, path) -> None:
        header = ",".join(LOG_COLUMNS)
        np.savetxt(path, self.data, delimiter=",", header=header,
                   comments="", fmt="%.12g")


def _finalize_vpv(data: np.ndarray, beta) -> None:
    """Fill the adapted-gain Lyapunov columns once the final gains are known."""
    if data.shape[0] == 0:
        return
    khat = data[:, [_COL["khat_x"], _COL["khat_y"], _COL["khat_z"]]]
    ep = data[:, [_COL["ep_x_m"], _COL["ep_y_m"], _COL["ep_z_m"]]]
    ev = data[:, [_COL["ev_x_mps"], _COL["ev_y_mps"], _COL["ev_z_mps"]]]
    gain_gap = khat[-1] - khat
    vpv = 0.5 * ep**2 + 0.5 * ev**2 + 0.5 * gain_gap**2 / np.asarray(beta)
    data[:, [_COL["vpv_x"], _COL["vpv_y"], _COL["vpv_z"]]] = vpv


def run(
    scenario: Scenario,
    ref_source: Callable[[float], ReferenceTrajectory] | None = None,
    force_source: Callable[[float], tuple] | None = None,
    snapshot_sink: Callable[[dict], None] | None = None,
    snapshot_hz: float = 30.0,
    pace_real_time: bool | None = None,
) -> RunLog:
    """Execute one scenario through the full cascaded loop.

    ``ref_source`` bypasses the admittance layer with an externally supplied
    reference (used by step-response experiments); ``force_source`` overrides
    the scripted profile (used by the live telemetry service).  Divergence
    aborts the run with a partial log and status ``"diverged"``.
    """
    params = scenario.system
    dt = scenario.dt_s
    dt_pos = dt * POSITION_DECIMATION
    n_steps = scenario.n_steps
    rng = np.random.default_rng(scenario.seed)

    pos_ctrl = PositionController(scenario.position_gains, params)
    att_ctrl = AttitudeController(scenario.attitude_gains, params)
    allocator = Allocator(params)
    admit = AdmittanceFilter(scenario.admittance, scenario.initial_position_m,
                             yaw=scenario.yaw_setpoint_rad)

    if force_source is None:
        force_source = scenario.force_lookup()
    pace = scenario.live_mode if pace_real_time is None else pace_real_time

    eta = tuple(float(v) for v in scenario.initial_eta())
    state = SimState(0.0, np.array(eta))
    consts = dynamics._constants(params)
    z_home = eta[4]

    log_every = scenario.log_every_steps
    n_rows = (n_steps + log_every - 1) // log_every
    data = np.empty((n_rows, len(LOG_COLUMNS)))
    status = "ok"

    # repeated events (e.g. chatter-induced negative thrust) are counted,
    # with only the first few occurrences kept verbatim
    events: list = []
    event_counts: dict = {}

    def note_event(t_ev: float, kind: str, detail: str) -> None:
        event_counts[kind] = event_counts.get(kind, 0) + 1
        if event_counts[kind] <= 20:
            events.append((t_ev, kind, detail))

    # held between position ticks
    ref = admit.reference()
    thrust = params.hover_thrust_n()
    phi_d = theta_d = 0.0
    ep = ev = khat = np.zeros(3)
    f_meas = f_gated = np.zeros(3)
    psi_d = scenario.yaw_setpoint_rad
    force_limit = scenario.force_limit_n

    wrench4 = np.empty(4)
    row = 0
    wall_start = time.monotonic()
    snapshot_period = 1.0 / snapshot_hz if snapshot_sink else None
    next_snapshot_t = 0.0

    for k in range(n_steps):
        t = k * dt
        state.t = t
        fx, fy, fz = force_source(t)
        f_mag = math.sqrt(fx * fx + fy * fy + fz * fz)
        if f_mag > force_limit:
            scale = force_limit / f_mag
            fx, fy, fz = fx * scale, fy * scale, fz * scale
            note_event(t, "force_clamped",
                       f"applied force {f_mag:.2f} N exceeds limit")

        if k % POSITION_DECIMATION == 0:
            meas = split_measurement((fx, fy, fz), scenario.sensor_noise_std_n, rng)
            f_meas = meas.total
            if ref_source is not None:
                ref = ref_source(t)
                f_gated = np.zeros(3)
                adapt_on = True
            else:
                ref = admit.step(f_meas, dt_pos)
                f_gated = admit.last_gated
                landed = (eta[4] - z_home) < LANDED_ALTITUDE_M and \
                    abs(eta[5]) < LANDED_SPEED_MPS
                adapt_on = admit.gate_open or not landed
            out = pos_ctrl.step(ref, state, dt_pos, adapt_enabled=adapt_on)
            if out.singular:
                note_event(t, "thrust_singularity", "held previous output")
            thrust, phi_d, theta_d = out.thrust_n, out.phi_d, out.theta_d
            ep, ev, khat = out.e_p, out.e_v, out.khat

        att = att_ctrl.step(phi_d, theta_d, psi_d, state, dt)
        m1, m2, m3 = att.moments_nm
        wrench4[0] = thrust
        wrench4[1:] = att.moments_nm
        u8 = allocator.apply(wrench4)
        if u8[0] < 0.0 or u8[4] < 0.0:
            note_event(t, "negative_thrust",
                       f"allocated thrusts {u8[0]:.3f}, {u8[4]:.3f} N")

        if k % log_every == 0:
            s1, s2, s3 = att.s_phi
            data[row] = (
                t, *eta,
                *ref.position, *ref.velocity, *ref.acceleration, ref.yaw,
                phi_d, theta_d,
                thrust, m1, m2, m3,
                *u8,
                *ep, *ev,
                *att.e_phi, s1, s2, s3,
                *khat,
                0.0, 0.0, 0.0,
                0.5 * s1 * s1, 0.5 * s2 * s2, 0.5 * s3 * s3,
                *f_gated, *f_meas, fx, fy, fz,
            )
            row += 1

        if snapshot_sink is not None and t >= next_snapshot_t:
            snapshot_sink(_snapshot(t, eta, ref, ep, att, thrust, f_gated,
                                    khat, admit.gate_open))
            next_snapshot_t = t + snapshot_period

        try:
            eta = dynamics._rk4(eta, thrust, m1, m2, m3, fx, fy, fz, dt, consts)
            dynamics.check_attitude(eta, t + dt, scenario.attitude_limit_rad)
        except DivergedError as exc:
            note_event(exc.t, "diverged", str(exc))
            status = "diverged"
            data = data[:row]
            break
        state.eta[:] = eta

        if pace:
            lag = (k + 1) * dt - (time.monotonic() - wall_start)
            if lag > 0.002:
                time.sleep(lag)

    data = data[:row]
    _finalize_vpv(data, scenario.position_gains.beta)
    final = SimState(n_steps * dt if status == "ok" else state.t, np.array(eta))
    return RunLog(scenario=scenario, data=data, status=status,
                  final_state=final, events=events, event_counts=event_counts)


def _snapshot(t, eta, ref, ep, att, thrust, f_gated, khat, gate_open) -> dict:
    return {
        "type": "snapshot",
        "t_s": round(t, 6),
        "state": [float(v) for v in eta],
        "ref_position_m": [float(v) for v in ref.position],
        "ref_velocity_mps": [float(v) for v in ref.velocity],
        "e_p_m": [float(v) for v in ep],
        "e_phi_rad": [float(v) for v in att.e_phi],
        "s_phi": [float(v) for v in att.s_phi],
        "thrust_n": float(thrust),
        "moments_nm": [float(v) for v in att.moments_nm],
        "fh_n": [float(v) for v in f_gated],
        "khat": [float(v) for v in khat],
        "gate_open": bool(gate_open),
    }


def metrics(log: RunLog) -> dict:
    """Summary statistics of a run: tracking errors, surfaces, thrust."""
    if log.data.shape[0] == 0:
        return {"status": log.status, "rows": 0}

    def _axis_stats(names, axes, tol):
        stats = {}
        t = log.t
        for axis, name in zip(axes, names):
            e = log.column(name)
            abs_e = np.abs(e)
            peak = float(abs_e.max())
            outside = np.nonzero(abs_e > tol)[0]
            settle = float(t[outside[-1]]) if outside.size else 0.0
            stats[axis] = {
                "rms": float(np.sqrt(np.mean(e * e))),
                "max_abs": peak,
                "settling_time_s": settle,
                "normalization": peak,
            }
        return stats

    thrust = log.column("thrust_n")
    weight = log.scenario.system.hover_thrust_n()
    surfaces = np.abs(log.columns("s_roll", "s_pitch", "s_yaw"))
    displacement = log.final_state.eta[0:6:2] - np.asarray(log.scenario.initial_position_m)
    summary = {
        "status": log.status,
        "rows": int(log.data.shape[0]),
        "duration_s": float(log.t[-1]) if log.data.shape[0] else 0.0,
        "position_error": _axis_stats(("ep_x_m", "ep_y_m", "ep_z_m"),
                                      ("x", "y", "z"), 1e-3),
        "attitude_error": _axis_stats(("ephi_rad", "etheta_rad", "epsi_rad"),
                                      ("roll", "pitch", "yaw"), 1e-2),
        "max_abs_surface": [float(v) for v in surfaces.max(axis=0)],
        "thrust_n": {
            "min": float(thrust.min()),
            "max": float(thrust.max()),
            "mean": float(thrust.mean()),
            "hover_weight_n": float(weight),
        },
        "final_displacement_m": [float(v) for v in displacement],
        "khat_final": [float(v) for v in log.data[-1, [_COL["khat_x"], _COL["khat_y"], _COL["khat_z"]]]],
        "events": [list(e) for e in log.events],
        "event_counts": dict(log.event_counts),
    }
    return summary


def normalized_errors(log: RunLog, names=("ep_x_m", "ep_y_m", "ep_z_m")) -> np.ndarray:
    """Error series scaled by their own peak magnitude (peak becomes 1.0)."""
    cols = log.columns(*names)
    peaks = np.abs(cols).max(axis=0)
    peaks[peaks == 0.0] = 1.0
    return cols / peaks


@dataclass
class ReachingRun:
    """Outcome of one attitude-reaching experiment."""

    initial_error_rad: tuple
    v0: np.ndarray
    bound_s: np.ndarray
    reach_time_s: np.ndarray
    lyapunov_increase: float
    band_after_reach: np.ndarray


def attitude_reaching_experiment(
    initial_error_rad,
    params=None,
    gains=None,
    dt: float = 5e-6,
    surface_tol: float = 1e-3,
    settle_window_s: float = 0.01,
) -> ReachingRun:
    """Closed-loop reaching test with the position loop frozen at hover.

    Starts from the given attitude errors (desired attitude is zero), holds
    thrust at the hover value, and runs the attitude loop every step.
    Records the first time each axis's |surface| falls below ``surface_tol``,
    the worst discrete Lyapunov increase observed while outside the
    tolerance, and the post-reach chattering band.
    """
    from .attitude import AttitudeGains, _axis_moment, _drag_gyro_accel
    from .params import SystemParams

    params = params or SystemParams()
    gains = gains or AttitudeGains()
    consts = dynamics._constants(params)
    inertia = params.inertia_kgm2
    thrust = params.hover_thrust_n()

    e0 = tuple(float(v) for v in initial_error_rad)
    eta = [0.0] * 12
    eta[6], eta[8], eta[10] = -e0[0], -e0[1], -e0[2]
    eta = tuple(eta)

    s0 = [
        gains.zeta[i] * e0[i]
        + gains.gamma * math.copysign(abs(e0[i]) ** gains.epsilon, e0[i])
        for i in range(3)
    ]
    v0 = 0.5 * np.asarray(s0) ** 2
    bound = reaching_time_bound(v0, gains)

    horizon = float(bound.max()) * 1.5 + settle_window_s
    n_steps = int(math.ceil(horizon / dt))
    reach = [math.nan] * 3
    prev_v = list(v0)
    prev_abs_s = [abs(s) for s in s0]
    worst_increase = 0.0
    band = [0.0] * 3
    moments = [0.0] * 3
    zeta = gains.zeta

    for k in range(n_steps):
        t = k * dt
        # desired attitude held at zero, so its derivatives are exactly zero
        qphi = _drag_gyro_accel(eta, params)
        all_reached = True
        for i in range(3):
            e = -eta[6 + 2 * i]
            edot = -eta[7 + 2 * i]
            s, moments[i] = _axis_moment(inertia[i], 0.0, qphi[i], e, edot,
                                         zeta[i], gains)
            abs_s = abs(s)
            v = 0.5 * s * s
            if math.isnan(reach[i]):
                if abs_s < surface_tol:
                    reach[i] = t
                else:
                    all_reached = False
            else:
                # settled chattering band: skip the transition half-window
                if t >= reach[i] + 0.5 * settle_window_s:
                    band[i] = max(band[i], abs_s)
                if t < reach[i] + settle_window_s:
                    all_reached = False
            if k > 0 and prev_abs_s[i] > surface_tol:
                worst_increase = max(worst_increase, v - prev_v[i])
            prev_v[i] = v
            prev_abs_s[i] = abs_s
        if all_reached:
            break
        eta = dynamics._rk4(eta, thrust, moments[0], moments[1], moments[2],
                            0.0, 0.0, 0.0, dt, consts)

    return ReachingRun(e0, v0, bound, np.asarray(reach), worst_increase,
                       np.asarray(band))
