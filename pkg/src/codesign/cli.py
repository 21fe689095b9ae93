"""Command-line front end: table, srcc, stage1, codesign, mixed, report.

Exit codes: 0 on success, 2 for configuration errors, 1 for runtime errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .errors import CodesignError, ConfigValidationError
from .harness import (
    cmd_codesign,
    cmd_mixed,
    cmd_report,
    cmd_srcc,
    cmd_stage1,
    cmd_table,
    load_config,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="codesign",
        description="Architecture/accelerator co-design experiments over "
                    "synthetic spaces and an analytical dataflow cost model.",
    )
    parser.add_argument("--config", "-c", required=True, type=Path,
                        help="path to the experiment config JSON")
    parser.add_argument("--out", type=Path, default=None,
                        help="override the config's output directory")
    parser.add_argument("--workers", type=int, default=1,
                        help="parallel workers for table construction")
    parser.add_argument("--log-level", default="INFO",
                        choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("table", help="compute the full performance table")
    srcc_p = sub.add_parser("srcc", help="SRCC matrices and CDFs from the table")
    srcc_p.add_argument("--table", type=Path, default=None,
                        help="reuse an existing performance table CSV")
    sub.add_parser("stage1", help="build the proxy's optimal-architecture set")
    codesign_p = sub.add_parser("codesign", help="run the three-strategy comparison")
    codesign_p.add_argument("--no-sweep", action="store_true",
                            help="skip the all-proxies sweep")
    sub.add_parser("mixed", help="layer-wise mixed-dataflow experiment")
    sub.add_parser("report", help="summarize an existing bundle")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        if args.out is not None:
            config = dataclasses.replace(config, output_dir=str(args.out))
        if args.command == "table":
            path = cmd_table(config, workers=args.workers)
        elif args.command == "srcc":
            path = cmd_srcc(config, table_path=args.table, workers=args.workers)
        elif args.command == "stage1":
            path = cmd_stage1(config)
        elif args.command == "codesign":
            path = cmd_codesign(config, workers=args.workers,
                                sweep_all_proxies=not args.no_sweep)
        elif args.command == "mixed":
            path = cmd_mixed(config, workers=args.workers)
        else:
            print(cmd_report(config), end="")
            return EXIT_OK
        print(path)
        return EXIT_OK
    except ConfigValidationError as exc:
        for violation in exc.violations:
            print(f"config error: {violation}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except CodesignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
