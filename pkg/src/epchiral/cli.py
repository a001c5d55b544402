"""
Command-line entry point.

    epchiral surface --config run.cfg --out results/
    epchiral evolve  --config run.cfg --out results/ [--direction cw|ccw] [--init plus|minus]
    epchiral sweep   --config run.cfg --out results/ --axis gamma_0 --from Omega/3 --to 0.99*Omega --points 25
    epchiral verify  --config run.cfg --out results/

Exit codes: 0 ok, 2 integrator failure, 3 undetermined verdict, 4 verification
failed, 5 outside the weak-coupling regime. Output files are written with
17 significant digits and LF line endings, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, config, dynamics, model
from .errors import EPChiralError, ParseError, RegimeError, ValidationError

EXIT_OK = 0
EXIT_INTEGRATOR = 2
EXIT_UNDETERMINED = 3
EXIT_VERIFY_FAILED = 4
EXIT_REGIME = 5

SCHEMA_VERSION = 1
SURFACE_COLUMNS = ("gamma", "theta", "re_lp", "im_lp", "re_lm", "im_lm")
TRAJECTORY_COLUMNS = ("t", "theta", "gamma", "re_ax", "im_ax", "re_ay", "im_ay",
                      "abs_cp", "abs_cm", "re_traj", "im_traj")
SWEEP_COLUMNS = ("axis_value", "n_nats", "t_d_1", "t_d_2", "chiral_flag", "error")


def fmt(x):
    return format(float(x), ".17g")


def _csv_text(columns, rows):
    buf = io.StringIO(newline="")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def _numeric_csv(columns, table):
    buf = io.StringIO(newline="")
    buf.write(",".join(columns) + "\n")
    np.savetxt(buf, table, fmt="%.17g", delimiter=",", newline="\n")
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else str(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _json_text(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _write(path, text):
    path.write_bytes(text.encode("utf-8"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def result_envelope(cfg, report, trajectory_path=None, checksums=None):
    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "config_echo": config.serialize_config(cfg),
        "trajectory_path": trajectory_path,
        "report": report,
        "checksums": checksums or {},
    }


def surface_csv(cfg, gamma_range, theta_range, resolution, track=True):
    grid = model.surface_grid(cfg.system.Omega, gamma_range, theta_range, resolution, track)
    G, TH = np.meshgrid(grid.gammas, grid.thetas, indexing="ij")
    lp, lm = grid.lambda_plus.ravel(), grid.lambda_minus.ravel()
    table = np.column_stack([G.ravel(), TH.ravel(), lp.real, lp.imag, lm.real, lm.imag])
    return _numeric_csv(SURFACE_COLUMNS, table)


def trajectory_csv(traj):
    _, weighted = analysis.riemann_trajectory(traj)
    s = traj.states
    table = np.column_stack([
        traj.times, traj.thetas, traj.gammas,
        s[:, 0].real, s[:, 0].imag, s[:, 1].real, s[:, 1].imag,
        np.abs(traj.c_plus), np.abs(traj.c_minus), weighted.real, weighted.imag,
    ])
    return _numeric_csv(TRAJECTORY_COLUMNS, table)


def sweep_csv(result):
    rows = []
    for v, delays, flag, err in zip(result.axis_values, result.delay_times,
                                    result.chiral_flags, result.errors):
        cells = ["" if d is None else fmt(d) for d in delays[:2]]
        cells += [""] * (2 - len(cells))
        rows.append([fmt(v), str(len(delays)), *cells, "1" if flag else "0",
                     (err or "").replace(",", ";").replace("\n", " ")])
    return _csv_text(SWEEP_COLUMNS, rows)


def cmd_surface(cfg, out, gamma_range, theta_range, resolution, track=True):
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "surface.csv", surface_csv(cfg, gamma_range, theta_range, resolution, track))
    return EXIT_OK


def cmd_evolve(cfg, out):
    out.mkdir(parents=True, exist_ok=True)
    traj = dynamics.integrate_envelope(cfg.system, cfg.loop, cfg.run.initial_label, cfg.integrator)
    report = analysis.classify_final(traj, tie_ratio=cfg.run.tie_ratio)
    checksums = {}
    traj_path = None
    if "trajectory" in cfg.run.outputs:
        traj_path = "trajectory.csv"
        checksums[traj_path] = _write(out / traj_path, trajectory_csv(traj))
    if "report" in cfg.run.outputs:
        _write(out / "report.json",
               _json_text(result_envelope(cfg, report.to_dict(), traj_path, checksums)))
    return EXIT_OK if report.determinate else EXIT_UNDETERMINED


def cmd_sweep(cfg, out, axis, values):
    out.mkdir(parents=True, exist_ok=True)
    result = analysis.sweep_delay(cfg.system, cfg.loop, axis, values,
                                  cfg.run.initial_label, cfg.run.direction, cfg.integrator)
    _write(out / "sweep.csv", sweep_csv(result))
    if all(result.errors):
        return EXIT_INTEGRATOR
    return EXIT_OK


def cmd_verify(cfg, out, tol=None):
    out.mkdir(parents=True, exist_ok=True)
    tol = cfg.run.tol if tol is None else tol
    report = dynamics.verify_envelope_reduction(
        cfg.system, cfg.loop, cfg.run.initial_label, tol, cfg.integrator, cfg.full_integrator)
    _write(out / "verify.json", _json_text(result_envelope(cfg, report.to_dict())))
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def build_parser():
    parser = argparse.ArgumentParser(prog="epchiral", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, type=Path, help="configuration file")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--direction", choices=("cw", "ccw"))
        p.add_argument("--init", choices=("plus", "minus"))
        p.add_argument("--seedless", action="store_true",
                       help="reserved; the tool uses no random numbers")
        return p

    p = common(sub.add_parser("surface", help="eigenvalue sheets over (Gamma, theta)"))
    p.add_argument("--gamma-range", nargs=2, default=("0", "2*Omega"), metavar=("LO", "HI"))
    p.add_argument("--theta-range", nargs=2, default=("0", "pi/2"), metavar=("LO", "HI"))
    p.add_argument("--resolution", type=int, default=101)
    p.add_argument("--sheets", choices=("tracked", "gain-loss"), default="tracked",
                   help="continuity-tracked labels or gain/loss sorted labels")

    common(sub.add_parser("evolve", help="run one loop and classify the final state"))

    p = common(sub.add_parser("sweep", help="NAT delay times versus one loop parameter"))
    p.add_argument("--axis", required=True, choices=analysis.AXES)
    p.add_argument("--from", dest="start", help="first axis value (expression)")
    p.add_argument("--to", dest="stop", help="last axis value (expression)")
    p.add_argument("--points", type=int, default=25)

    p = common(sub.add_parser("verify", help="compare envelope and full dynamics"))
    p.add_argument("--tol", type=float)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config.parse_config(args.config.read_text(encoding="utf-8"))
        cfg = cfg.with_overrides(args.direction, args.init)
    except (ParseError, ValidationError) as exc:
        print(f"epchiral: config error: {exc}", file=sys.stderr)
        return EXIT_INTEGRATOR
    names = {"Omega": cfg.system.Omega, "omega_0": cfg.system.omega_0}
    try:
        if args.command == "surface":
            g = [config.evaluate(v, names) for v in args.gamma_range]
            t = [config.evaluate(v, names) for v in args.theta_range]
            return cmd_surface(cfg, args.out, g, t, args.resolution, args.sheets == "tracked")
        if args.command == "evolve":
            return cmd_evolve(cfg, args.out)
        if args.command == "sweep":
            if args.points < 1:
                print("epchiral: --points must be positive", file=sys.stderr)
                return EXIT_INTEGRATOR
            default = analysis.default_sweep_values(args.axis, cfg.system.Omega)
            lo = default[0] if args.start is None else config.evaluate(args.start, names)
            hi = default[-1] if args.stop is None else config.evaluate(args.stop, names)
            return cmd_sweep(cfg, args.out, args.axis, np.linspace(lo, hi, args.points))
        if args.command == "verify":
            return cmd_verify(cfg, args.out, args.tol)
    except RegimeError as exc:
        print(f"epchiral: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except (EPChiralError, ValueError, ArithmeticError) as exc:
        print(f"epchiral: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTEGRATOR
    return EXIT_INTEGRATOR


if __name__ == "__main__":
    sys.exit(main())
