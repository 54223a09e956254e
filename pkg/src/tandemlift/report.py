"""Render run logs to figures and files.

Uses matplotlib's object-oriented API directly (no pyplot, no global
backend state), so reports render identically headless or embedded.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .simulation import RunLog, metrics, normalized_errors

AXIS_COLORS = ("tab:blue", "tab:orange", "tab:green")


def _new_figure(rows: int, cols: int, height: float) -> tuple[Figure, np.ndarray]:
    fig = Figure(figsize=(11, height), dpi=120)
    FigureCanvasAgg(fig)
    axes = fig.subplots(rows, cols, squeeze=False)
    return fig, axes


def tracking_figure(log: RunLog) -> Figure:
    """Orientation, position, velocity, and normalized tracking errors."""
    t = log.t
    fig, axes = _new_figure(4, 3, 11.0)

    desired = (("phi_d_rad", "phi_rad", "roll"),
               ("theta_d_rad", "theta_rad", "pitch"),
               ("ref_yaw_rad", "psi_rad", "yaw"))
    for ax, (ref_name, act_name, label) in zip(axes[0], desired):
        ax.plot(t, log.column(ref_name), "k--", lw=1.0, label="desired")
        ax.plot(t, log.column(act_name), color="tab:red", lw=0.8, label="actual")
        ax.set_ylabel(f"{label} [rad]")
        ax.legend(loc="upper right", fontsize=7)

    position = (("ref_x_m", "x_m", "x"), ("ref_y_m", "y_m", "y"),
                ("ref_z_m", "z_m", "z"))
    for ax, (ref_name, act_name, label) in zip(axes[1], position):
        ax.plot(t, log.column(ref_name), "k--", lw=1.0, label="reference")
        ax.plot(t, log.column(act_name), color="tab:blue", lw=0.8, label="actual")
        ax.set_ylabel(f"{label} [m]")
        ax.legend(loc="best", fontsize=7)

    velocity = (("ref_vx_mps", "xdot_mps", "vx"), ("ref_vy_mps", "ydot_mps", "vy"),
                ("ref_vz_mps", "zdot_mps", "vz"))
    for ax, (ref_name, act_name, label) in zip(axes[2], velocity):
        ax.plot(t, log.column(ref_name), "k--", lw=1.0)
        ax.plot(t, log.column(act_name), color="tab:green", lw=0.8)
        ax.set_ylabel(f"{label} [m/s]")

    norm_pos = normalized_errors(log)
    norm_att = normalized_errors(log, ("ephi_rad", "etheta_rad", "epsi_rad"))
    for series, ax, labels in ((norm_pos, axes[3][0], ("x", "y", "z")),
                               (norm_att, axes[3][1], ("roll", "pitch", "yaw"))):
        for i, label in enumerate(labels):
            ax.plot(t, series[:, i], color=AXIS_COLORS[i], lw=0.8, label=label)
        ax.set_ylabel("normalized error")
        ax.legend(loc="upper right", fontsize=7)
    ax = axes[3][2]
    for i, label in enumerate(("roll", "pitch", "yaw")):
        ax.plot(t, log.column(("s_roll", "s_pitch", "s_yaw")[i]),
                color=AXIS_COLORS[i], lw=0.8, label=label)
    ax.set_ylabel("sliding surface")
    ax.legend(loc="upper right", fontsize=7)

    for ax in axes[-1]:
        ax.set_xlabel("t [s]")
    fig.suptitle(f"{log.scenario.name}: tracking")
    fig.tight_layout()
    return fig


def control_inputs_figure(log: RunLog) -> Figure:
    """Total thrust and the three body moments."""
    t = log.t
    fig, axes = _new_figure(2, 2, 6.5)
    panels = (("thrust_n", "total thrust [N]"),
              ("mx_nm", "roll moment [N m]"),
              ("my_nm", "pitch moment [N m]"),
              ("mz_nm", "yaw moment [N m]"))
    weight = log.scenario.system.hover_thrust_n()
    for ax, (name, label) in zip(axes.ravel(), panels):
        ax.plot(t, log.column(name), lw=0.7, color="tab:blue")
        if name == "thrust_n":
            ax.axhline(weight, color="k", ls="--", lw=0.8, label="weight")
            ax.legend(loc="upper right", fontsize=7)
        ax.set_ylabel(label)
        ax.set_xlabel("t [s]")
    fig.suptitle(f"{log.scenario.name}: control inputs")
    fig.tight_layout()
    return fig


def guidance_figure(log: RunLog) -> Figure:
    """Applied, measured, and gated guidance forces per axis."""
    t = log.t
    fig, axes = _new_figure(3, 1, 7.0)
    for i, axis in enumerate(("x", "y", "z")):
        ax = axes[i][0]
        ax.plot(t, log.column(f"fapp_{axis}_n"), lw=1.2, color="0.6",
                label="applied")
        ax.plot(t, log.column(f"fmeas_{axis}_n"), lw=0.6, color="tab:orange",
                label="measured")
        ax.plot(t, log.column(f"fh_{axis}_n"), lw=0.8, color="tab:blue",
                label="gated")
        ax.set_ylabel(f"F{axis} [N]")
        if i == 0:
            ax.legend(loc="upper right", fontsize=7)
    axes[-1][0].set_xlabel("t [s]")
    fig.suptitle(f"{log.scenario.name}: guidance forces")
    fig.tight_layout()
    return fig


def path_figure(log: RunLog) -> Figure:
    """Top-down path and altitude profile."""
    fig, axes = _new_figure(1, 2, 4.5)
    x, y, z = log.column("x_m"), log.column("y_m"), log.column("z_m")
    ax = axes[0][0]
    ax.plot(log.column("ref_x_m"), log.column("ref_y_m"), "k--", lw=1.0,
            label="reference")
    ax.plot(x, y, color="tab:blue", lw=0.9, label="actual")
    ax.plot(x[0], y[0], "go", ms=6, label="start")
    ax.plot(x[-1], y[-1], "rs", ms=6, label="end")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(fontsize=7)
    ax = axes[0][1]
    ax.plot(log.t, log.column("ref_z_m"), "k--", lw=1.0)
    ax.plot(log.t, z, color="tab:blue", lw=0.9)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("z [m]")
    fig.suptitle(f"{log.scenario.name}: path")
    fig.tight_layout()
    return fig


def save_report(log: RunLog, out_dir, figures: bool = True) -> dict:
    """Write the CSV log, JSON summary, and PNG figures for one run.

    Returns a dict of artifact names to paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = log.scenario.name
    paths = {}

    csv_path = out / f"{stem}_log.csv"
    log.to_csv(csv_path)
    paths["log_csv"] = csv_path

    summary_path = out / f"{stem}_summary.json"
    summary_path.write_text(json.dumps(metrics(log), indent=2), encoding="utf-8")
    paths["summary_json"] = summary_path

    if figures and log.data.shape[0] > 1:
        for name, builder in (("tracking", tracking_figure),
                              ("inputs", control_inputs_figure),
                              ("guidance", guidance_figure),
                              ("path", path_figure)):
            fig_path = out / f"{stem}_{name}.png"
            builder(log).savefig(fig_path)
            paths[f"{name}_png"] = fig_path
    return paths
