"""Command-line entry point.

    bgkheat simulate --config run.ini --out results/ --seed 7
    bgkheat constants --set equilibrium.T_inf=2

Exit status: 0 when every check passes, 1 when a check fails, 2 for an
invalid configuration, 3 when a computation aborts. The last three write
``failures.json`` into the output directory.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import INITIAL_PRESETS, SUBCOMMANDS, parse_config
from .errors import BGKHeatError, ConfigurationError
from .experiments import run_subcommand, write_manifest, write_outcome

EXIT_OK, EXIT_CHECK_FAILED, EXIT_BAD_CONFIG, EXIT_ABORTED = 0, 1, 2, 3


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bgkheat", description="Kinetic gas / heat bath experiments.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="INI file with per-module sections")
        p.add_argument("--out", type=Path, default=Path("out") / name, help="output directory")
        p.add_argument("--seed", type=_seed, default=0, help="seed for randomized states")
        p.add_argument("--preset", choices=INITIAL_PRESETS, help="initial-data preset")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override one config value (repeatable)")
        p.add_argument("--quiet", action="store_true", help="only print failures")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, overrides=args.overrides, subcommand=args.subcommand,
                           seed=args.seed, preset=args.preset)
    except ConfigurationError as exc:
        print(exc, file=sys.stderr)
        write_manifest(args.out / "failures.json", {
            "subcommand": args.subcommand, "status": "invalid-config",
            "violations": str(exc).splitlines()[1:] or [str(exc)],
        })
        return EXIT_BAD_CONFIG

    try:
        outcome = run_subcommand(cfg)
    except BGKHeatError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        write_manifest(args.out / "failures.json", {
            "subcommand": args.subcommand, "status": "aborted",
            "error": type(exc).__name__, "message": str(exc), "config": cfg.resolved(),
        })
        return EXIT_ABORTED

    write_outcome(outcome, cfg, args.out)
    if not args.quiet:
        for line in outcome.report:
            print(line)
    for c in outcome.checks:
        if not (args.quiet and c.passed):
            status = "PASS" if c.passed else "FAIL"
            print(f"{status} {c.name}: {c.value:.6g} (threshold {c.threshold:.6g}) {c.detail}".rstrip())
    return EXIT_OK if outcome.passed else EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
