"""Command-line front end.

Angles are given in degrees on the command line. Exit codes:
0 success, 2 configuration error, 3 verification failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import io as nio
from . import pulsec, sweep
from .config import ConfigError, load_config

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_IO = 0, 2, 3, 4


class VerificationFailure(RuntimeError):
    pass


def _emit(text: str, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def cmd_scan(cfg, args) -> int:
    cfg = cfg.with_(theta_steps=args.theta_steps, phi_steps=args.phi_steps,
                    calibration_sigma=args.noise_sigma)
    pulse_level = args.pulse_level or cfg.calibration_sigma > 0
    rows = sweep.signal_rows(cfg.theta_steps, cfg.phi_steps, pulse_level,
                             cfg.spin_system(), cfg.noise(), cfg.receiver())
    _emit(nio.scan_csv_text(rows), args.out or cfg.csv)
    figures = args.figures or cfg.figures
    if figures:
        from . import plots
        for p in plots.render_scan(sweep.surfaces(rows), figures):
            print(f"wrote {p}", file=sys.stderr)
    return EXIT_OK


def _verify_table(rows) -> str:
    lines = [f"{'sequence':<14} {'mode':<9} {'class':<14} {'residual':>10}  target"]
    for r in rows:
        lines.append(f"{r['sequence']:<14} {r['mode']:<9} {r['class']:<14} "
                     f"{r['residual']:>10.2e}  {r['target']}")
    return "\n".join(lines) + "\n"


def cmd_verify(cfg, args) -> int:
    system = cfg.spin_system()
    theta, phi = np.radians(args.theta), np.radians(args.phi)
    if args.listing:
        with open(args.listing, encoding="utf-8") as fh:
            seq = pulsec.parse_listing(fh.read(), args.listing)
        target = sweep.named_target(args.target, theta, phi)
        rows = []
        for mode in ("ideal", "physical"):
            rep = pulsec.verify_equivalence(seq, target, system, mode)
            rows.append({"sequence": args.listing, "target": sweep.TARGET_NAMES[args.target],
                         "mode": mode, "class": rep.cls, "residual": rep.residual,
                         "fitted_phases": rep.fitted_phases})
    else:
        rows = sweep.verification_rows(system, theta, phi)
    if args.json:
        sys.stdout.write(nio.dumps(rows))
    else:
        sys.stdout.write(_verify_table(rows))
    if any(r["class"] == "fail" for r in rows):
        raise VerificationFailure("at least one sequence failed verification")
    return EXIT_OK


def cmd_compile(cfg, args) -> int:
    theta, phi = np.radians(args.theta), np.radians(args.phi)
    seq = {
        "randomization": pulsec.compile_randomization,
        "cnot23": pulsec.compile_cnot23,
        "full": lambda: pulsec.compile_full(theta, phi),
    }[args.program]()
    system = cfg.spin_system()
    expanded = pulsec.expand_macros(seq, system)
    header = [f"# sequence: {seq.name}", *(f"# {note}" for note in seq.notes),
              f"# total free-evolution time: {expanded.duration() * 1e3:.3f} ms"]
    body = (expanded if args.expand else seq).listing()
    _emit("\n".join(header) + "\n" + body, args.out)
    return EXIT_OK


def cmd_tomo(cfg, args) -> int:
    cfg = cfg.with_(calibration_sigma=args.noise_sigma)
    theta, phi = np.radians(args.theta), np.radians(args.phi)
    res = sweep.tomography_run(theta, phi, cfg.spin_system(), cfg.noise(), cfg.deviation_mode)
    noise = cfg.noise()
    dev, bell = res["deviation"], res["bell_deviation"]
    report = {
        "theta_deg": args.theta,
        "phi_deg": args.phi,
        "noise": {"calibration_sigma": noise.calibration_sigma, "ensemble": noise.inhomogeneity_samples,
                  "t2_enabled": noise.t2_enabled, "seed": noise.seed},
        "rho": nio.matrix_to_json(res["rho"]),
        "marginal_12": nio.matrix_to_json(res["marginal_12"], (1, 2)),
        "marginal_3": nio.matrix_to_json(res["marginal_3"], (3,)),
        "expected": nio.matrix_to_json(res["expected"]),
        "deviation": dev.as_dict(),
        "deviation_percent": {"avg": 100 * dev.avg_abs_dev, "max": 100 * dev.max_abs_dev},
        "bell_deviation": bell.as_dict(),
        "min_eigenvalue": res["min_eigenvalue"],
        "recovered_fidelity": res["recovered_fidelity"],
    }
    _emit(nio.dumps(report), args.out or cfg.json)
    figures = args.figures or cfg.figures
    if figures:
        from . import plots
        for p in plots.render_tomo(res, figures):
            print(f"wrote {p}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nohiding", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--config", help="INI file with [spins], [noise], [grid], [receiver], [tomo], [output] sections")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("scan", help="integrated signals over a (theta, phi) grid as CSV")
    s.add_argument("--theta-steps", type=int, help="theta grid points over 0..180 deg (default 13)")
    s.add_argument("--phi-steps", type=int, help="phi grid points over 0..360 deg (default 25)")
    s.add_argument("--pulse-level", action="store_true", help="simulate the compiled pulse sequence")
    s.add_argument("--noise-sigma", type=float, help="relative flip-angle error (implies --pulse-level)")
    s.add_argument("--out", help="CSV path (default stdout)")
    s.add_argument("--figures", help="directory for mesh/contour PNGs")
    s.set_defaults(func=cmd_scan)

    v = sub.add_parser("verify", help="check compiled sequences against their target unitaries")
    v.add_argument("--json", action="store_true", help="machine-readable report")
    v.add_argument("--listing", help="verify a pulse listing file instead of the built-in programs")
    v.add_argument("--target", default="randomization", choices=sorted(sweep.TARGET_NAMES),
                   help="target unitary for --listing")
    v.add_argument("--theta", type=float, default=90.0, help="theta (deg) for the full program")
    v.add_argument("--phi", type=float, default=90.0, help="phi (deg) for the full program")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("compile", help="print a pulse listing")
    c.add_argument("program", choices=("randomization", "cnot23", "full"))
    c.add_argument("--expand", action="store_true", help="lower macros to RF/DELAY/GRAD")
    c.add_argument("--theta", type=float, default=90.0)
    c.add_argument("--phi", type=float, default=90.0)
    c.add_argument("--out", help="output path (default stdout)")
    c.set_defaults(func=cmd_compile)

    t = sub.add_parser("tomo", help="tomography of the simulated output state as JSON")
    t.add_argument("--theta", type=float, required=True, help="degrees")
    t.add_argument("--phi", type=float, required=True, help="degrees")
    t.add_argument("--noise-sigma", type=float, help="relative flip-angle error")
    t.add_argument("--out", help="JSON path (default stdout)")
    t.add_argument("--figures", help="directory for density-matrix bar plots")
    t.set_defaults(func=cmd_tomo)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.func(cfg, args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except VerificationFailure as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
