from corrmfg.cli.common import (
    EXIT_OK,
    add_common_arguments,
    add_grid_arguments,
    add_model_arguments,
    command_main,
    effective_horizon,
    model_grid,
    resolve_model,
)
from corrmfg.errors import SolverError
from corrmfg.report import emit_plot_data, save_report, solution_report
from corrmfg.team import solve_team_finite, solve_team_infinite

import argparse
import logging
import sys
import time

DEFAULT_OUT = "team_report.json"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    add_model_arguments(parser)
    add_grid_arguments(parser)
    parser.add_argument('--tol', dest='vi_tol', type=float, default=1e-8, help='value iteration tolerance')
    parser.add_argument('--opt-tol', type=float, default=1e-8, help='prescription ascent tolerance')
    parser.add_argument('--out', dest='out_path', type=str, default=DEFAULT_OUT, help='report JSON output')
    parser.add_argument('--plot-dir', type=str, default=None, help='directory for values/residual CSV files')
    add_common_arguments(parser)


def execute(config) -> int:
    model = resolve_model(config)
    grid = model_grid(model, config.grid_res)
    horizon = effective_horizon(model, config)
    out = config.out_path or DEFAULT_OUT
    logging.info(f"solving team problem for {model.name} on {grid}, horizon {horizon or 'inf'}")

    started = time.time()
    try:
        if horizon is None:
            solution = solve_team_infinite(model, grid, opts=config.solver)
        else:
            solution = solve_team_finite(model, horizon, grid, config.solver)
    except SolverError as e:
        # Keep whatever was computed for postmortem
        save_report(out, solution_report(model, e.partial_solution, config.to_dict(), started, error=e))
        raise

    save_report(out, solution_report(model, solution, config.to_dict(), started))
    if config.plot_dir:
        emit_plot_data(solution, config.plot_dir)
    logging.info(f"team value at the initial mean field: {float(solution.value_table(1)(model.initial_meanfield)):.10g}")
    return EXIT_OK


# Entry point for use in setup.py
def main(argv=None):
    sys.exit(command_main("Solve the mean-field team problem on a simplex grid.", "solve-team",
                          add_arguments, execute, argv))


# Allows executing this module with "python -m"
if __name__ == '__main__':
    main()
