"""
Pieces shared by the command modules: common flags, logging setup, the
RunConfig built from parsed arguments and the exit-code policy.
"""

import argparse
import json
import logging
from typing import Callable, Optional

import numpy as np

from corrmfg.config import OTHERS_LAWS, RunConfig, default_grid_resolution
from corrmfg.errors import CorrMFGError, HorizonMismatchError, SolverError
from corrmfg.grid import build_simplex_grid
from corrmfg.meanfield import lambda_rollout
from corrmfg.mfe import assemble_equilibrium
from corrmfg.model import INFINITE, ValidatedModel, as_meanfield, load_model
from corrmfg.report import load_report
from corrmfg.team import ResolvedTeamPolicy, TeamSolution

EXIT_OK = 0
EXIT_INVALID_INPUT = 1
EXIT_SOLVER_FAILURE = 2

logger = logging.getLogger("corrmfg.cli")


def horizon_arg(value: str):
    if value.lower() in ("inf", "infinite"):
        return INFINITE
    horizon = int(value)
    if horizon < 1:
        raise argparse.ArgumentTypeError(f"horizon must be a positive integer or 'inf', got {value}")
    return horizon


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--seed', type=int, default=0, help='root seed for random starts and sampling')
    parser.add_argument('--log-level', type=str, default='INFO',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'], help='logging level')
    parser.add_argument('--no-progress', action='store_true', help='disable progress bars')


def add_model_arguments(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument('--model', dest='model_path', type=str, required=required, help='JSON model file')
    parser.add_argument('--others-law', type=str, default='marginal', choices=OTHERS_LAWS,
                        help='law of the block partners in the focal agent expectation')


def add_grid_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--grid-res', type=int, default=None,
                        help='simplex grid resolution (default depends on the mean-field dimension)')
    parser.add_argument('--horizon', type=horizon_arg, default=None,
                        help="number of stages, or 'inf' (default: the model horizon)")


def configure_logging(level: str) -> None:
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO),
                        format='%(asctime)s %(name)s %(levelname)s: %(message)s')


def config_from_args(subcommand: str, args: argparse.Namespace) -> RunConfig:
    """Map parsed arguments onto a validated RunConfig."""
    fields = RunConfig.__dataclass_fields__
    values = {name: getattr(args, name) for name in fields if name not in ('subcommand', 'solver')
              and getattr(args, name, None) is not None}
    values['progress'] = not getattr(args, 'no_progress', False)
    return RunConfig(subcommand=subcommand, **values).validate()


def resolve_model(config: RunConfig) -> ValidatedModel:
    return load_model(config.model_path, others_law=config.others_law)


def model_grid(model: ValidatedModel, grid_res: Optional[int]):
    dim = model.n_joint_states
    return build_simplex_grid(dim, grid_res or default_grid_resolution(dim))


def effective_horizon(model: ValidatedModel, config: RunConfig):
    """Horizon from the command line, else from the model; None means infinite."""
    horizon = config.horizon if config.horizon is not None else model.horizon
    return None if horizon in (None, INFINITE) else int(horizon)


def parse_z1(text: Optional[str], model: ValidatedModel) -> np.ndarray:
    """``initial`` (or nothing) for the model's z1, else a JSON or comma-separated array."""
    if text is None or text.strip().lower() == 'initial':
        return model.initial_meanfield.copy()
    text = text.strip()
    try:
        values = json.loads(text)
    except json.JSONDecodeError:
        values = [float(v) for v in text.strip('[]').split(',') if v.strip()]
    return as_meanfield(values, model.n_joint_states)


def run_guarded(command: Callable[[RunConfig], int], config: RunConfig) -> int:
    """
    Run one command under the exit-code policy: 0 on success, 1 on invalid
    input, 2 on solver failure (the command writes its partial report first).
    """
    try:
        return command(config)
    except FileNotFoundError as e:
        logger.error(str(e))
        return EXIT_INVALID_INPUT
    except SolverError as e:
        logger.error(f"solver failed: {e}")
        return EXIT_SOLVER_FAILURE
    except (CorrMFGError, ValueError, KeyError, json.JSONDecodeError) as e:
        logger.error(f"invalid input: {e}")
        return EXIT_INVALID_INPUT


def command_main(description: str, subcommand: str, add_arguments, execute, argv=None) -> int:
    """Standalone entry point for one command."""
    parser = argparse.ArgumentParser(description=description)
    add_arguments(parser)
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        config = config_from_args(subcommand, args)
    except ValueError as e:
        logger.error(f"invalid input: {e}")
        return EXIT_INVALID_INPUT
    return run_guarded(execute, config)


def load_solution(config: RunConfig):
    """
    Model and solution stored in ``config.report_path``.

    A ``--model`` given alongside the report must be the model the report was
    computed for.
    """
    model, solution, report = load_report(config.report_path)
    if solution is None:
        raise ValueError(f"report {config.report_path} holds no solution tables")
    if report.get("status") == "failed":
        logger.warning(f"report {config.report_path} is a partial report of a failed run")
    if config.model_path is not None:
        supplied = load_model(config.model_path, others_law=model.others_law)
        if supplied.digest != model.digest:
            raise ValueError(f"model {config.model_path} differs from the model embedded in {config.report_path}")
    return model, solution


def add_report_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--report', dest='report_path', type=str, required=True,
                        help='report JSON written by solve-team or solve-mfe')
    add_model_arguments(parser, required=False)
    parser.add_argument('--z1', type=str, default=None,
                        help="initial mean field: 'initial' (default), a JSON array or comma-separated values")
    parser.add_argument('--mode', dest='assemble_mode', type=str, default='interpolate',
                        choices=['interpolate', 'resolve'],
                        help='interpolate tabulated prescriptions or re-solve the stage problem at each z_t')


def assemble_from_solution(model: ValidatedModel, solution, z1: np.ndarray, config: RunConfig):
    """
    Forward pass through a team or game solution.

    :returns: (list of prescriptions, Trajectory)
    """
    horizon = None if config.horizon in (None, INFINITE) else int(config.horizon)
    if isinstance(solution, TeamSolution):
        if horizon is None:
            if solution.stationary:
                raise HorizonMismatchError("a stationary solution needs an explicit --horizon")
            horizon = solution.horizon
        if config.assemble_mode == 'resolve':
            source = ResolvedTeamPolicy(model, solution, config.solver)
        else:
            source = solution.policy_table()
        trajectory = lambda_rollout(model, z1, source, horizon)
        return list(trajectory.prescriptions), trajectory
    return assemble_equilibrium(model, z1, solution, horizon, mode=config.assemble_mode, opts=config.solver)
