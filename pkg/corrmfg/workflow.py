"""
Notebook-friendly workflow for solving and certifying a model.
This module strings the solver, assembly, certificate and report steps together.
"""

import time
from pathlib import Path
from typing import Optional, Union
import logging

import numpy as np

from .config import SolverOptions, default_grid_resolution
from .grid import build_simplex_grid
from .mfe import GameSolution, solve_mfe_finite, solve_mfe_infinite
from .model import ValidatedModel, as_meanfield, load_model
from .report import emit_plot_data, save_report, solution_report, write_json, write_trajectory
from .team import TeamSolution, solve_team_finite, solve_team_infinite
from .verify import VerifyReport, verify_mfe

logger = logging.getLogger(__name__)


class SolverWorkflow:
    """
    A class to manage the solve, assemble, certify and report steps for one model.
    """

    def __init__(self,
                 model: Union[str, Path, ValidatedModel],
                 output_dir: Union[str, Path],
                 grid_res: Optional[int] = None,
                 horizon: Optional[int] = None,
                 options: Optional[SolverOptions] = None,
                 others_law: str = "marginal"):
        """
        Initialize the workflow with a model and an output directory.

        Parameters:
        -----------
        model : str, Path or ValidatedModel
            Model file to load, or an already validated model
        output_dir : str or Path
            Directory where reports and CSV files are written
        grid_res : int, optional
            Grid resolution; chosen from the mean-field dimension if omitted
        horizon : int, optional
            Overrides the model horizon (required for infinite models when
            assembling or certifying)
        options : SolverOptions, optional
            Numerical solver options
        others_law : str
            ``marginal`` or ``conditional`` law of the block partners
        """
        if isinstance(model, ValidatedModel):
            self.model = model
        else:
            self.model = load_model(model, others_law=others_law)
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.options = (options or SolverOptions()).validate()
        dim = self.model.n_joint_states
        self.grid = build_simplex_grid(dim, grid_res or default_grid_resolution(dim))
        self.horizon = horizon if horizon is not None else self.model.horizon

        self.team_report = self.output_dir / "team_report.json"
        self.game_report = self.output_dir / "game_report.json"
        self.verdict = self.output_dir / "verdict.json"
        self.plot_dir = self.output_dir / "plots"

        logger.info(f"Workflow initialized for model {self.model.name} with {self.grid}")

    def solve_team(self) -> TeamSolution:
        """
        Solve the mean-field team problem and write its report.

        Returns:
        --------
        TeamSolution
            Team values and optimal prescriptions on the grid
        """
        started = time.time()
        if self.horizon is None:
            solution = solve_team_infinite(self.model, self.grid, opts=self.options)
        else:
            solution = solve_team_finite(self.model, self.horizon, self.grid, self.options)
        save_report(self.team_report, solution_report(self.model, solution, self._config(), started))
        return solution

    def solve_game(self) -> GameSolution:
        """
        Compute a mean-field equilibrium and write its report.

        Returns:
        --------
        GameSolution
            Equilibrium values and generating functions on the grid
        """
        started = time.time()
        if self.horizon is None:
            solution = solve_mfe_infinite(self.model, self.grid, opts=self.options)
        else:
            solution = solve_mfe_finite(self.model, self.horizon, self.grid, self.options)
        save_report(self.game_report, solution_report(self.model, solution, self._config(), started))
        return solution

    def certify(self, solution: GameSolution, z1: Optional[np.ndarray] = None, eps: float = 1e-5,
                mode: str = "interpolate", horizon: Optional[int] = None) -> VerifyReport:
        """
        Assemble the equilibrium from ``z1`` and run the certificate.

        Parameters:
        -----------
        solution : GameSolution
            Output of solve_game
        z1 : array, optional
            Initial mean field; the model's own initial mean field if omitted
        eps : float
            Certificate tolerance on deviation gains
        mode : str
            ``interpolate`` or ``resolve`` assembly
        horizon : int, optional
            Assembly horizon (truncation horizon for stationary solutions)

        Returns:
        --------
        VerifyReport
            Verdict with consistency residual and deviation gains
        """
        z1 = self.model.initial_meanfield if z1 is None else as_meanfield(z1, self.model.n_joint_states)
        report, _, trajectory = verify_mfe(self.model, solution, z1, horizon, eps, mode=mode, opts=self.options)
        write_json(self.verdict, report.to_dict())
        write_trajectory(self.output_dir, trajectory)
        emit_plot_data(solution, self.plot_dir, trajectory)
        return report

    def run_complete_workflow(self, eps: float = 1e-5, mode: str = "interpolate") -> VerifyReport:
        """
        Solve the game, assemble the equilibrium from the model's initial mean
        field and certify it.

        Returns:
        --------
        VerifyReport
            Verdict of the certificate
        """
        logger.info(f"Starting complete workflow for {self.model.name}")
        try:
            solution = self.solve_game()
            horizon = None if solution.stationary else solution.horizon
            report = self.certify(solution, eps=eps, mode=mode, horizon=horizon)
            logger.info(f"Workflow complete! Verdict: {report.verdict}")
            return report
        except Exception as e:
            logger.error(f"Workflow failed: {e}")
            raise

    def _config(self) -> dict:
        return {
            "grid": self.grid.metadata(),
            "horizon": self.horizon,
            "options": vars(self.options).copy(),
        }


# Convenience function for direct notebook use
def solve_and_certify(model: Union[str, Path, ValidatedModel],
                      output_dir: Union[str, Path],
                      grid_res: Optional[int] = None,
                      horizon: Optional[int] = None,
                      eps: float = 1e-5,
                      mode: str = "interpolate",
                      options: Optional[SolverOptions] = None) -> VerifyReport:
    """
    Convenience function to run the complete workflow in one call.

    Parameters:
    -----------
    model : str, Path or ValidatedModel
        Model file or validated model
    output_dir : str or Path
        Output directory for reports and CSV files
    grid_res : int, optional
        Grid resolution
    horizon : int, optional
        Horizon override
    eps : float
        Certificate tolerance
    mode : str
        ``interpolate`` or ``resolve`` assembly
    options : SolverOptions, optional
        Numerical solver options

    Returns:
    --------
    VerifyReport
        Verdict of the certificate
    """
    workflow = SolverWorkflow(model, output_dir, grid_res, horizon, options)
    return workflow.run_complete_workflow(eps, mode)
