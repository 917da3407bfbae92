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
from corrmfg.report import emit_plot_data, write_trajectory

import argparse
import logging
import sys


def add_arguments(parser: argparse.ArgumentParser) -> None:
    add_report_arguments(parser)
    parser.add_argument('--horizon', '--T', dest='horizon', type=horizon_arg, default=None,
                        help='number of stages to assemble (required for infinite-horizon reports)')
    parser.add_argument('--out', dest='out_path', type=str, default='.',
                        help='directory for zpath.csv and prescriptions.csv')
    parser.add_argument('--plot-dir', type=str, default=None, help='directory for plot CSV files')
    add_common_arguments(parser)


def execute(config) -> int:
    model, solution = load_solution(config)
    z1 = parse_z1(config.z1, model)
    _, trajectory = assemble_from_solution(model, solution, z1, config)
    write_trajectory(config.out_path or '.', trajectory)
    if config.plot_dir:
        emit_plot_data(solution, config.plot_dir, trajectory)
    logging.info(f"assembled {trajectory.horizon} stages from {config.report_path}")
    return EXIT_OK


# Entry point for use in setup.py
def main(argv=None):
    sys.exit(command_main("Assemble the policy encoded by a report into a mean-field and prescription path.",
                          "assemble", add_arguments, execute, argv))


# Allows executing this module with "python -m"
if __name__ == '__main__':
    main()
