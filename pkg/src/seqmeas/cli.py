"""Command line entry point: ``seqmeas run|validate|demo``."""
from __future__ import annotations

import argparse
import sys
from importlib import resources

from . import harness


def _demo_names():
    root = resources.files("seqmeas") / "demos"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def _add_run_flags(p):
    p.add_argument("--out-dir", default="out", help="directory for results.csv, results.json, run.log")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default: ${harness.THREADS_ENV} or 1)")
    p.add_argument("--tolerance", type=float, default=None, help="override the tolerance budget")
    p.add_argument("--format", choices=["csv", "json", "both"], default="both")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqmeas", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run a sweep config")
    p.add_argument("config")
    _add_run_flags(p)
    p = sub.add_parser("validate", help="check a config without computing")
    p.add_argument("config")
    p = sub.add_parser("demo", help="run a bundled config")
    p.add_argument("name", nargs="?", help="demo name; omit to list")
    _add_run_flags(p)
    return parser


def validate(path, out=None) -> int:
    out = out or sys.stdout
    try:
        cfg = harness.validate_config(harness.load_config(path))
    except harness.ConfigError as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=out)
        return harness.EXIT_CONFIG
    print("ok", file=out)
    for q in harness.derived_quantities(cfg):
        print("alpha={alpha:.6g} beta={beta:.6g} mu={mu:.6g} kappa={kappa:.9g}".format(**q), file=out)
    n = len(harness.plan_tasks(cfg))
    print(f"tasks: {n}", file=out)
    return harness.EXIT_OK


def _run(args, path) -> int:
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return harness.EXIT_CONFIG
    code = harness.run(path, args.out_dir, args.threads, args.tolerance, args.format)
    messages = {
        harness.EXIT_OK: "all bounds hold",
        harness.EXIT_VIOLATION: "bound violations found",
        harness.EXIT_CONFIG: "invalid config",
        harness.EXIT_COVERAGE: "numerical coverage errors",
    }
    print(f"{messages[code]}; see {args.out_dir}/run.log", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        return validate(args.config)
    if args.command == "run":
        return _run(args, args.config)
    names = _demo_names()
    if args.name is None:
        print("\n".join(names))
        return harness.EXIT_OK
    if args.name not in names:
        print(f"error: unknown demo {args.name!r}; choose from {', '.join(names)}", file=sys.stderr)
        return harness.EXIT_CONFIG
    with resources.as_file(resources.files("seqmeas") / "demos" / f"{args.name}.yaml") as path:
        return _run(args, path)


if __name__ == "__main__":
    sys.exit(main())
