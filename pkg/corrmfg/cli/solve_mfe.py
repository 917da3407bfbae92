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
from corrmfg.mfe import bellman_residual, solve_mfe_finite, solve_mfe_infinite
from corrmfg.report import emit_plot_data, save_report, solution_report

import argparse
import logging
import sys
import time

DEFAULT_OUT = "game_report.json"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    add_model_arguments(parser)
    add_grid_arguments(parser)
    parser.add_argument('--eps', dest='eps_consistency', type=float, default=1e-6,
                        help='tolerance of the per-stage fixed-point check')
    parser.add_argument('--tol', dest='vi_tol', type=float, default=1e-8,
                        help='value iteration tolerance (infinite horizon)')
    parser.add_argument('--enumerate-all-pure', action='store_true',
                        help='record every consistent pure prescription per node (tiny instances only)')
    parser.add_argument('--out', dest='out_path', type=str, default=DEFAULT_OUT, help='report JSON output')
    parser.add_argument('--plot-dir', type=str, default=None, help='directory for values/residual CSV files')
    add_common_arguments(parser)


def execute(config) -> int:
    model = resolve_model(config)
    grid = model_grid(model, config.grid_res)
    horizon = effective_horizon(model, config)
    out = config.out_path or DEFAULT_OUT
    logging.info(f"solving mean-field equilibrium for {model.name} on {grid}, horizon {horizon or 'inf'}")

    started = time.time()
    try:
        if horizon is None:
            solution = solve_mfe_infinite(model, grid, opts=config.solver)
        else:
            solution = solve_mfe_finite(model, horizon, grid, config.solver)
    except SolverError as e:
        save_report(out, solution_report(model, e.partial_solution, config.to_dict(), started, error=e))
        raise

    report = solution_report(model, solution, config.to_dict(), started)
    report["bellman_residual"] = bellman_residual(model, solution)
    save_report(out, report)
    if config.plot_dir:
        emit_plot_data(solution, config.plot_dir)
    logging.info(f"equilibrium tables written, bellman residual {report['bellman_residual']:.3e}")
    return EXIT_OK


# Entry point for use in setup.py
def main(argv=None):
    sys.exit(command_main("Compute a mean-field equilibrium by the backward per-stage fixed-point recursion.",
                          "solve-mfe", add_arguments, execute, argv))


# Allows executing this module with "python -m"
if __name__ == '__main__':
    main()
