"""
``corrmfg`` command: one subcommand per pipeline.

    corrmfg solve-team --model m.json --grid-res 10 --out team.json
    corrmfg solve-mfe  --model m.json --horizon 3 --out game.json
    corrmfg assemble   --report game.json --z1 initial --out trajectory/
    corrmfg verify     --report game.json --eps 1e-5 --out verdict.json
    corrmfg simulate   --report game.json --blocks 100000 --seed 42 --out sim.csv
"""

from corrmfg.cli import assemble, simulate, solve_mfe, solve_team, verify
from corrmfg.cli.common import EXIT_INVALID_INPUT, config_from_args, configure_logging, logger, run_guarded
from corrmfg.config import RunConfig

import argparse
import sys

COMMANDS = {
    "solve-team": (solve_team, "solve the mean-field team problem"),
    "solve-mfe": (solve_mfe, "compute a mean-field equilibrium"),
    "verify": (verify, "certify an equilibrium against deviations"),
    "simulate": (simulate, "simulate a finite population of blocks"),
    "assemble": (assemble, "assemble mean-field and prescription paths from a report"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrmfg",
                                     description="Mean-field teams and games with correlated types.")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for name, (module, help_text) in COMMANDS.items():
        module.add_arguments(subparsers.add_parser(name, help=help_text))
    return parser


def run(config: RunConfig) -> int:
    """Execute one validated configuration and return the exit status."""
    module, _ = COMMANDS[config.subcommand]
    return run_guarded(module.execute, config)


# Entry point for use in setup.py
def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        config = config_from_args(args.subcommand, args)
    except ValueError as e:
        logger.error(f"invalid input: {e}")
        sys.exit(EXIT_INVALID_INPUT)
    sys.exit(run(config))


# Allows executing this module with "python -m"
if __name__ == '__main__':
    main()
