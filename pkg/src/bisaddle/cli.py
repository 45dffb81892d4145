"""Command line interface: gen | run | verify | curves."""

import argparse
import json
import sys

from .bench import (
    complexity_curves,
    curves_csv_text,
    load_config,
    parse_grid,
    read_trace_csv,
    run_experiment,
    write_curves_csv,
)
from .certify import monitor_bound, monitors_for
from .errors import BisaddleError, MissingField
from .problem import problem_spec_to_json


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="bisaddle",
        description="Benchmark harness for bilinear saddle-point solvers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="write a problem description JSON")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--dx", type=int, required=True)
    gen.add_argument("--dy", type=int, required=True)
    gen.add_argument("--Lx", type=float, required=True)
    gen.add_argument("--Ly", type=float, required=True)
    gen.add_argument("--mux", type=float, required=True)
    gen.add_argument("--muy", type=float, required=True)
    gen.add_argument("--normA", type=float, required=True)
    gen.add_argument("--out", required=True)

    run = sub.add_parser("run", help="execute a config and write its trace CSV")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int, default=None,
                     help="override the config seed")

    verify = sub.add_parser("verify", help="re-certify a trace CSV offline")
    verify.add_argument("--trace", required=True)
    verify.add_argument("--which", default=None,
                        help="monitor name; defaults to the solver's full set")

    curves = sub.add_parser("curves", help="write the complexity-curve table")
    curves.add_argument("--Lx", type=float, required=True)
    curves.add_argument("--Ly", type=float, required=True)
    curves.add_argument("--mux", type=float, required=True)
    curves.add_argument("--muy", type=float, required=True)
    curves.add_argument("--grid", required=True,
                        help="start:stop:logN or start:stop:linN")
    curves.add_argument("--out", default=None,
                        help="output CSV path (stdout when omitted)")
    return parser


def _print_reports(reports):
    failed = False
    for report in reports:
        status = "pass" if report.passed else "FAIL"
        print(
            f"{status} {report.name}: trials={report.trials} "
            f"failures={report.failures} worst-slack={report.worst_slack:.6e}"
        )
        failed = failed or not report.passed
    return failed


def _cmd_gen(args):
    spec = {
        "seed": args.seed, "dx": args.dx, "dy": args.dy,
        "Lx": args.Lx, "Ly": args.Ly, "mux": args.mux, "muy": args.muy,
        "normA": args.normA,
    }
    with open(args.out, "w") as fh:
        fh.write(problem_spec_to_json(spec) + "\n")
    print(f"wrote {args.out}")
    return 0


def _cmd_run(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    trace, reports = run_experiment(cfg)
    totals = trace.totals
    print(
        f"{trace.solver}: {len(trace)} iterations, oracle totals "
        f"grad_g={totals[0]} grad_h={totals[1]} Ay={totals[2]} ATx={totals[3]}"
    )
    print(f"wrote {cfg.out_path}")
    return 1 if _print_reports(reports) else 0


def _cmd_verify(args):
    trace = read_trace_csv(args.trace)
    names = (args.which,) if args.which else monitors_for(trace.solver)
    if not names:
        raise MissingField(f"no monitors registered for solver {trace.solver!r}")
    reports = [monitor_bound(trace, name) for name in names]
    return 1 if _print_reports(reports) else 0


def _cmd_curves(args):
    grid = parse_grid(args.grid)
    points = complexity_curves(args.Lx, args.Ly, args.mux, args.muy, grid)
    if args.out:
        write_curves_csv(points, args.out)
        print(f"wrote {args.out} ({len(points)} rows)")
    else:
        sys.stdout.write(curves_csv_text(points))
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "run": _cmd_run,
    "verify": _cmd_verify,
    "curves": _cmd_curves,
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (BisaddleError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
