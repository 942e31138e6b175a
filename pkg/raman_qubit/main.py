"""Command-line entry point for the Raman qubit simulator.

* ``raman-qubit <command> --config FILE [--set key=value ...]``
* Flags override the file, the file overrides the schema defaults.
* Exit status: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence

import structlog

from raman_qubit.cli.commands import EXIT_CONFIG, run
from raman_qubit.cli.runspec import Command, OutputFormat, load_config
from raman_qubit.core.errors import RamanError, UnknownCommandError
from raman_qubit.core.log import configure_logging

logger = structlog.get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="raman-qubit",
        description="Simulate and calibrate phase-controlled Raman rotations of a hole orbital qubit.",
    )
    parser.add_argument("command", help=f"one of: {', '.join(c.value for c in Command)}")
    parser.add_argument("--config", metavar="FILE", help="JSON run specification")
    parser.add_argument(
        "--set",
        dest="overrides",
        metavar="KEY=VALUE",
        action="append",
        default=[],
        help="override a config entry, e.g. --set energies.small_delta_mev=0.0004 (repeatable)",
    )
    parser.add_argument("--output-dir", help="directory for data files and summary.json")
    parser.add_argument("--format", choices=[f.value for f in OutputFormat], help="sweep table format")
    parser.add_argument("--seed", type=int, help="base seed for noise draws")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    return parser


def _flag_overrides(args: argparse.Namespace) -> list[str]:
    overrides = [f"command={args.command}"]
    if args.output_dir is not None:
        overrides.append(f"output_dir={args.output_dir}")
    if args.format is not None:
        overrides.append(f"format={args.format}")
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return overrides + list(args.overrides)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(level=args.log_level)
    log = logger.bind(command=args.command)

    try:
        if args.command not in {c.value for c in Command}:
            raise UnknownCommandError(f"unknown command '{args.command}'")
        spec = load_config(args.config, _flag_overrides(args))
    except RamanError as exc:
        log.error("config_rejected", error=str(exc), field=getattr(exc, "field", None))
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        log.error("config_unreadable", error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    return run(spec)


if __name__ == "__main__":
    sys.exit(main())
