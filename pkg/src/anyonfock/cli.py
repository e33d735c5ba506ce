"""Command line: ``anyonfock run <suite>`` and ``anyonfock report <path>``."""
from __future__ import annotations

import argparse
import sys

from . import __version__
from .config import ConfigError, load_config
from .qfock import ResourceError
from .report import emit_tables, load_report, render_figures, summarize
from .suites import SUITES, build_report, run_suite

EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_RESOURCE = 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="anyonfock", description=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a verification suite")
    run.add_argument("suite", choices=SUITES + ("all",))
    run.add_argument("--config", help="INI configuration file")
    run.add_argument("--seed", type=int, help="master seed (overrides config and environment)")
    run.add_argument("--out", default="anyonfock-out", help="output directory")
    run.add_argument("--format", choices=("json", "csv"), default="json")
    run.add_argument("--parallel", action="store_true", help="run suites in worker processes")

    rep = sub.add_parser("report", help="summarize a report and render figures")
    rep.add_argument("path", help="report.json or the directory holding it")
    rep.add_argument("--out", help="figure directory (default: next to the report)")
    return ap


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config, args.seed)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        results = run_suite(args.suite, cfg, parallel=args.parallel)
    except ResourceError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    report = build_report(args.suite, cfg, results)
    timings = {r.suite: r.timings for r in results}
    emit_tables(report, args.out, args.format, timings)
    for line in summarize(report):
        print(line)
    return 0 if report["passed"] else EXIT_FAIL


def _cmd_report(args) -> int:
    from pathlib import Path

    report = load_report(args.path)
    for line in summarize(report):
        print(line)
    p = Path(args.path)
    out = args.out or (p if p.is_dir() else p.parent)
    for path in render_figures(report, out):
        print(f"figure: {path}")
    return 0 if report["passed"] else EXIT_FAIL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    return _cmd_report(args)


if __name__ == "__main__":
    sys.exit(main())
