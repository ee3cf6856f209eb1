"""Command-line entry point: benchmark drivers and the verification suite.

Subcommands::

    viscoplast poiseuille  flow between plates with the exact solution
    viscoplast cavity      lid-driven cavity, implicit Euler to steady state
    viscoplast channel     expansion-contraction channel
    viscoplast verify      run the property-check suite

Every run writes a ``manifest.json`` (resolved parameters, version,
timestamp) next to its outputs; re-running with the same parameters
reproduces the CSV numbers exactly.  Exit codes: 0 success, 1 solver
failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .newton import ContinuationSchedule, NewtonError
from .postprocess import snapshot_of, write_csv, write_vtk
from .problems import (
    BINGHAM_FORMS,
    PAPER_EPS_SCHEDULE,
    CavityCase,
    ChannelCase,
    PoiseuilleCase,
    run_cavity,
    run_channel,
    run_poiseuille,
)


def _nonnegative_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return value


def _positive_float(text):
    value = float(text)
    if value <= 0.0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _eps_schedule(text):
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip())
        ContinuationSchedule(values)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))
    return values


def _apply_config_defaults(parser, argv):
    """A --config file of key=value lines provides flag defaults."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    try:
        path = argv[idx + 1]
    except IndexError:
        parser.error("--config requires a path")
    overrides = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        overrides.extend([f"--{key.strip().replace('_', '-')}", value.strip()])
    rest = argv[:idx] + argv[idx + 2 :]
    # config entries come first so explicit flags win
    return rest[:1] + overrides + rest[1:]


def build_parser():
    parser = argparse.ArgumentParser(prog="viscoplast", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"viscoplast {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--config", help="key=value file with flag defaults")

    p = sub.add_parser("poiseuille", parents=[common], help="flow between plates")
    p.add_argument("--tau-star", type=_positive_float, default=1.0)
    p.add_argument("--refinements", type=_nonnegative_int, default=2)
    p.add_argument("--eps-schedule", type=_eps_schedule, default=PAPER_EPS_SCHEDULE)
    p.add_argument("--form", choices=sorted(BINGHAM_FORMS), default="product")
    p.add_argument("--warm-start", choices=["reuse", "extrapolate"], default="reuse")
    p.add_argument("--tol", type=_positive_float, default=1e-9)

    c = sub.add_parser("cavity", parents=[common], help="lid-driven cavity")
    c.add_argument("--tau-star", type=_positive_float, default=3.0)
    c.add_argument("--dt", type=_positive_float, default=0.0005)
    c.add_argument("--eps", type=_positive_float, default=1e-4)
    c.add_argument("--refinements", type=_nonnegative_int, default=2)

    h = sub.add_parser("channel", parents=[common], help="expansion-contraction channel")
    h.add_argument("--bn", type=_positive_float, default=10.0)
    h.add_argument("--eps", type=_positive_float, default=1e-4)
    h.add_argument("--l-hat", type=_positive_float, default=3.0)
    h.add_argument("--delta", type=_positive_float, default=0.2)
    h.add_argument("--height", type=_positive_float, default=1.2)
    h.add_argument("--refinements", type=_nonnegative_int, default=1)

    v = sub.add_parser("verify", parents=[common], help="run the property suites")
    v.add_argument("--seed", type=int, default=0)
    return parser


def _write_manifest(out: Path, command, params):
    manifest = {
        "command": command,
        "parameters": params,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def cmd_poiseuille(args) -> int:
    out = args.out
    params = {
        "tau_star": args.tau_star,
        "refinements": args.refinements,
        "eps_schedule": list(args.eps_schedule),
        "form": args.form,
        "warm_start": args.warm_start,
        "tol": args.tol,
    }
    _write_manifest(out, "poiseuille", params)
    case = PoiseuilleCase(tau_star=args.tau_star, form=args.form)
    schedule = ContinuationSchedule(args.eps_schedule, args.warm_start)
    result = run_poiseuille(case, args.refinements, schedule, tol=args.tol, progress=True)
    write_csv(out / "errors.csv", result.HEADER, result.rows())
    for stage in result.stages:
        write_csv(
            out / f"history_level{stage.level}_eps{stage.eps:g}.csv",
            ("iteration", "residual"),
            list(enumerate(stage.residual_norms)),
        )
    for level, state in result.states.items():
        write_vtk(snapshot_of(state), out / f"fields_level{level}.vtk")
    if not result.all_converged():
        print("poiseuille: at least one continuation stage failed", file=sys.stderr)
        return 1
    print(f"poiseuille: {len(result.stages)} stages converged, outputs in {out}")
    return 0


def cmd_cavity(args) -> int:
    out = args.out
    params = {
        "tau_star": args.tau_star,
        "dt": args.dt,
        "eps": args.eps,
        "refinements": args.refinements,
    }
    _write_manifest(out, "cavity", params)
    case = CavityCase(tau_star=args.tau_star, dt=args.dt, eps=args.eps)
    try:
        result = run_cavity(case, refinements=args.refinements, progress=True)
    except (NewtonError, RuntimeError) as exc:
        print(f"cavity: {exc}", file=sys.stderr)
        return 1
    write_csv(
        out / "metrics.csv",
        ("tau_star", "dt", "eps", "psi_max", "y_center", "steps", "newton_iterations"),
        [
            (
                case.tau_star,
                case.dt,
                case.eps,
                result.psi_max,
                result.y_center,
                result.steps,
                result.newton_iterations,
            )
        ],
    )
    write_csv(
        out / "increments.csv",
        ("step", "velocity_increment"),
        list(enumerate(result.increments, start=1)),
    )
    write_vtk(
        snapshot_of(result.state, extra_point={"stream_function": result.psi}),
        out / "fields.vtk",
    )
    print(
        f"cavity: steady after {result.steps} steps, psi_max={result.psi_max:.5f}, "
        f"y_c={result.y_center:.4f}, outputs in {out}"
    )
    return 0


def cmd_channel(args) -> int:
    out = args.out
    params = {
        "bn": args.bn,
        "eps": args.eps,
        "l_hat": args.l_hat,
        "delta": args.delta,
        "height": args.height,
        "refinements": args.refinements,
    }
    _write_manifest(out, "channel", params)
    case = ChannelCase(
        bn=args.bn, l_hat=args.l_hat, delta=args.delta, h=args.height, eps=args.eps
    )
    try:
        result = run_channel(case, refinements=args.refinements, progress=True)
    except (NewtonError, ValueError) as exc:
        print(f"channel: {exc}", file=sys.stderr)
        return 1
    rows = [
        (case.bn, case.eps, rel, ld, result.upstream_r2)
        for rel, ld in sorted(result.dead_zone_lengths.items())
    ]
    write_csv(
        out / "metrics.csv",
        ("bn", "eps", "relative_threshold", "dead_zone_length", "upstream_r2"),
        rows,
    )
    header, samples = result.pressure_samples
    write_csv(out / "pressure_line.csv", header, samples)
    write_vtk(snapshot_of(result.state), out / "fields.vtk")
    print(
        f"channel: Bn={case.bn:g}, L_d={result.dead_zone_length:.5f} "
        f"(upstream fit R^2={result.upstream_r2:.5f}), outputs in {out}"
    )
    return 0


def cmd_verify(args) -> int:
    from . import verification

    _write_manifest(args.out, "verify", {"seed": args.seed})
    ok, _ = verification.run_all(seed=args.seed, out=sys.stdout)
    return 0 if ok else 1


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_defaults(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    handlers = {
        "poiseuille": cmd_poiseuille,
        "cavity": cmd_cavity,
        "channel": cmd_channel,
        "verify": cmd_verify,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
