"""Command-line entry point.

Exit codes: 0 all assertions passed, 1 an assertion failed, 2 invalid config.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

from ..errors import InvalidArgument, ScenarioInvalid
from .config import KINDS, load_config, load_config_file
from .report import write_report
from .scenarios import run

log = logging.getLogger("lusincap")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lusincap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--config", help="JSON scenario config (defaults are used when absent)")
        p.add_argument("--out", default="reports", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        if args.config:
            cfg = load_config_file(args.config, args.command, args.seed)
        else:
            cfg = load_config(None, args.command, args.seed)
    except (ScenarioInvalid, InvalidArgument) as exc:
        log.error("invalid config: %s", exc)
        return 2
    start = time.perf_counter()
    try:
        report = run(cfg)
    except (ScenarioInvalid, InvalidArgument) as exc:
        log.error("invalid scenario: %s", exc)
        return 2
    elapsed = time.perf_counter() - start
    paths = write_report(report, args.out, args.format)
    for a in report.assertions:
        print(f"{'PASS' if a.passed else 'FAIL'}  {a.name}" + (f"  [{a.detail}]" if a.detail and not a.passed else ""))
    print(f"{args.command}: {'passed' if report.passed else 'FAILED'} in {elapsed:.2f}s -> {', '.join(paths)}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
