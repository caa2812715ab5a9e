"""Command line interface: ``kpca-rff {run,diagnose,validate-config} --config PATH``.

Exit status is 0 on success, 1 when any experiment cell or the diagnostic failed and 2 for an invalid configuration or
a dataset too small for the configured splits.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import TYPE_CHECKING, Final

from kpca.rff import __version__, harness
from kpca.rff.errors import ConfigError, KpcaError

if TYPE_CHECKING:
    from collections.abc import Sequence

logger = logging.getLogger("kpca.rff")

EXIT_OK: Final = 0
EXIT_FAILED: Final = 1
EXIT_CONFIG: Final = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kpca-rff", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="log per-checkpoint metrics")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="only log warnings and errors")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run the configured experiment and write a CSV of results")
    run.add_argument("--out", help="results CSV, overrides the configured output")
    run.add_argument("--workers", type=int, help="number of (learner, seed) cells run in parallel")
    diag = commands.add_parser("diagnose", help="estimate the fourth-moment spectrum and the feature budget")
    validate = commands.add_parser("validate-config", help="print the effective configuration")
    for command in (run, diag):
        command.add_argument("--seed-offset", type=int, default=0, help="added to every configured seed")
    for command in (run, diag, validate):
        command.add_argument("--config", required=True, help="TOML experiment configuration")
    return parser


def _run(args: argparse.Namespace, config: harness.ExperimentConfig) -> int:
    if args.workers is not None and args.workers < 1:
        logger.error("--workers must be positive")
        return EXIT_CONFIG
    result = harness.run_experiment(config, out=args.out, workers=args.workers, seed_offset=args.seed_offset)
    for failure in result.failures:
        logger.error("%s seed %d failed: %s", failure.learner, failure.seed, failure.error)
    return EXIT_OK if result.ok else EXIT_FAILED


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line interface and return its exit status."""
    args = _build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        config = harness.parse_config(args.config)
    except ConfigError as exc:
        logger.error("Invalid configuration %s: %s", args.config, exc)  # noqa: TRY400
        return EXIT_CONFIG
    try:
        if args.command == "validate-config":
            print(json.dumps(harness.unstructure_config(config), indent=2))
            return EXIT_OK
        if args.command == "diagnose":
            print(harness.diagnose(config, seed_offset=args.seed_offset).render())
            return EXIT_OK
        return _run(args, config)
    except ConfigError as exc:
        logger.error("Invalid configuration %s: %s", args.config, exc)  # noqa: TRY400
        return EXIT_CONFIG
    except KpcaError as exc:
        logger.error("%s failed: %s", args.command, exc)  # noqa: TRY400
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
