"""Command-line interface.

Verbs:

* ``run``      -- execute a scripted scenario, write CSV/JSON/figures
* ``verify``   -- run the acceptance suite, one PASS/FAIL line per criterion
* ``serve``    -- live mode: telemetry + force commands over a socket
* ``allocate`` -- one-shot wrench -> actuator query
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import acceptance, report, scenario as scenario_mod, telemetry
from .allocation import AllocationWeights, Allocator, negative_thrusts, rotor_speeds
from .errors import RotorSaturationError, TandemliftError
from .params import RotorModel, SystemParams
from .simulation import metrics, run

BUILTIN_SCENARIOS = {
    "hover": scenario_mod.hover,
    "lift_guide_land": scenario_mod.lift_guide_land,
}


def _load_scenario(spec: str):
    path = Path(spec)
    if path.exists():
        return scenario_mod.load_scenario(path)
    if spec in BUILTIN_SCENARIOS:
        return BUILTIN_SCENARIOS[spec]()
    raise SystemExit(
        f"scenario '{spec}' is neither a file nor one of "
        f"{sorted(BUILTIN_SCENARIOS)}")


def _apply_overrides(scn, args):
    changes = {}
    if getattr(args, "dt", None) is not None:
        changes["dt_s"] = args.dt
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    return dataclasses.replace(scn, **changes) if changes else scn


def _cmd_run(args) -> int:
    scn = _apply_overrides(_load_scenario(args.scenario), args)
    log = run(scn)
    summary = metrics(log)
    out = Path(args.out)
    paths = report.save_report(log, out, figures=not args.no_figures)
    print(f"run '{scn.name}': {log.status}, {summary['rows']} rows")
    for key, path in paths.items():
        print(f"  {key}: {path}")
    if log.status != "ok":
        print("run diverged; see events in the summary", file=sys.stderr)
        return 2
    return 0


def _cmd_verify(args) -> int:
    results = acceptance.run_all()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        payload = [
            {"name": r.name, "passed": r.passed, "runtime_s": r.runtime_s,
             "details": r.details}
            for r in results
        ]
        (out / "acceptance.json").write_text(
            json.dumps(payload, indent=2, default=float), encoding="utf-8")
        print(f"wrote {out / 'acceptance.json'}")
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


def _cmd_serve(args) -> int:
    scn = _apply_overrides(_load_scenario(args.scenario), args)
    if not scn.live_mode:
        scn = dataclasses.replace(scn, live_mode=True)
    try:
        log = telemetry.serve(scn, port=args.port, host=args.host)
    except KeyboardInterrupt:
        print("\nsession interrupted")
        return 0
    print(f"session ended: {log.status}")
    if args.out:
        paths = report.save_report(log, Path(args.out))
        for key, path in paths.items():
            print(f"  {key}: {path}")
    return 0


def _parse_vector(text: str, expected: int, label: str) -> tuple:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != expected:
        raise SystemExit(f"{label} needs {expected} numbers, got {len(parts)}")
    return tuple(float(p) for p in parts)


def _cmd_allocate(args) -> int:
    wrench = _parse_vector(args.wrench, 4, "--wrench")
    sigma = (_parse_vector(args.sigma, 8, "--sigma")
             if args.sigma else (1.0,) * 8)
    allocator = Allocator(SystemParams(), AllocationWeights(sigma))
    u8 = allocator(np.asarray(wrench))
    labels = ("F_q1 [N]", "tau_q1x [N m]", "tau_q1y [N m]", "tau_q1z [N m]",
              "F_q2 [N]", "tau_q2x [N m]", "tau_q2y [N m]", "tau_q2z [N m]")
    print("actuator command:")
    for label, value in zip(labels, u8):
        print(f"  {label:>14s}: {value: .6f}")
    residual = allocator.residual(np.asarray(wrench), u8)
    print(f"  residual: {residual:.3e}")
    for idx in negative_thrusts(u8):
        print(f"  warning: quadrotor {idx + 1} thrust is negative")
    if args.rotors:
        rotor = RotorModel()
        for quad, offset in ((1, 0), (2, 4)):
            try:
                speeds = rotor_speeds(u8[offset], u8[offset + 1:offset + 4], rotor)
                text = ", ".join(f"{s:.1f}" for s in speeds)
                print(f"  quadrotor {quad} rotor speeds [rad/s]: {text}")
            except RotorSaturationError as exc:
                print(f"  quadrotor {quad}: {exc}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tandemlift",
        description="Two-quadrotor payload transport simulator and control stack")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scripted scenario")
    p_run.add_argument("--scenario", required=True,
                       help="YAML file or builtin name")
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument("--dt", type=float, help="override plant step [s]")
    p_run.add_argument("--seed", type=int, help="override RNG seed")
    p_run.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering")
    p_run.set_defaults(func=_cmd_run)

    p_verify = sub.add_parser("verify", help="run the acceptance suite")
    p_verify.add_argument("--out", help="write acceptance.json here")
    p_verify.set_defaults(func=_cmd_verify)

    p_serve = sub.add_parser("serve", help="live telemetry session")
    p_serve.add_argument("--scenario", required=True)
    p_serve.add_argument("--port", type=int, default=8752)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--out", help="write the session report here")
    p_serve.add_argument("--dt", type=float)
    p_serve.add_argument("--seed", type=int)
    p_serve.set_defaults(func=_cmd_serve)

    p_alloc = sub.add_parser("allocate", help="one-shot wrench query")
    p_alloc.add_argument("--wrench", required=True,
                         help="thrust and moments: 'U_th,Mx,My,Mz'")
    p_alloc.add_argument("--sigma", help="eight effort weights")
    p_alloc.add_argument("--rotors", action="store_true",
                         help="also print per-rotor speeds")
    p_alloc.set_defaults(func=_cmd_allocate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TandemliftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
