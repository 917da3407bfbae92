from corrmfg.cli.common import (
    EXIT_OK,
    add_common_arguments,
    add_report_arguments,
    assemble_from_solution,
    command_main,
    horizon_arg,
    load_solution,
    parse_z1,
)
from corrmfg.mfe import GameSolution
from corrmfg.report import simulation_frame, write_csv, write_json
from corrmfg.simulate import empirical_meanfield, monte_carlo_value

from pathlib import Path
import argparse
import logging
import sys

DEFAULT_OUT = "sim.csv"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    add_report_arguments(parser)
    parser.add_argument('--blocks', dest='n_blocks', type=int, default=100_000, help='number of simulated N-blocks')
    parser.add_argument('--samples', dest='n_samples', type=int, default=0,
                        help='Monte-Carlo samples of the focal reward-to-go per initial type (0 to skip)')
    parser.add_argument('--horizon', type=horizon_arg, default=None, help='number of simulated stages')
    parser.add_argument('--out', dest='out_path', type=str, default=DEFAULT_OUT, help='simulation CSV output')
    add_common_arguments(parser)


def execute(config) -> int:
    model, solution = load_solution(config)
    z1 = parse_z1(config.z1, model)
    gammas, trajectory = assemble_from_solution(model, solution, z1, config)
    horizon = len(gammas)

    empirical, deterministic, tv = empirical_meanfield(
        model, gammas, z1, config.n_blocks, horizon, config.seed, progress=config.progress
    )
    out = Path(config.out_path or DEFAULT_OUT)
    write_csv(out, simulation_frame(empirical, deterministic, tv))
    logging.info(f"max TV between empirical and deterministic mean field: {tv.max():.4e}")

    if config.n_samples > 0:
        if not isinstance(solution, GameSolution):
            raise ValueError("--samples needs a solve-mfe report")
        values = {}
        for x0 in range(model.n_states):
            mean, std_error = monte_carlo_value(
                model, solution, z1, 1, x0, config.n_samples, config.seed, horizon=horizon,
                mode=config.assemble_mode, progress=config.progress,
            )
            predicted = float(solution.value_table(1)(z1)[x0])
            values[str(x0)] = {"mean": mean, "std_error": std_error, "predicted": predicted}
        write_json(out.with_suffix(".values.json"), values)
    return EXIT_OK


# Entry point for use in setup.py
def main(argv=None):
    sys.exit(command_main("Simulate a finite population of correlated blocks under an assembled policy.",
                          "simulate", add_arguments, execute, argv))


# Allows executing this module with "python -m"
if __name__ == '__main__':
    main()
