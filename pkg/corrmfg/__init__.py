"""
corr-mfg - Mean-field teams and games with correlated types.

This package computes team-optimal policies and mean-field equilibria for
discrete-time, finite-state populations whose agents come in exchangeable
blocks of N correlated types, certifies the equilibria it finds and simulates
finite populations under them.
"""

__version__ = "1.0.0"
__author__ = "corr-mfg developers"

from .model import ValidatedModel, load_model, validate_model, parse_model, bundled_model_path
from .meanfield import Trajectory, phi_update, lambda_rollout, project_to_simplex
from .grid import SimplexGrid, build_simplex_grid, interpolate_value, interpolate_prescription
from .team import TeamSolution, solve_team_finite, solve_team_infinite
from .mfe import GameSolution, assemble_equilibrium, solve_mfe_finite, solve_mfe_infinite, finite_with_terminal
from .verify import VerifyReport, verify_mfe, verify_paths, brute_force_team
from .classical import classical_mfg_reference
from .simulate import empirical_meanfield, monte_carlo_value
from .workflow import SolverWorkflow, solve_and_certify

__all__ = [
    "ValidatedModel",
    "load_model",
    "validate_model",
    "parse_model",
    "bundled_model_path",
    "Trajectory",
    "phi_update",
    "lambda_rollout",
    "project_to_simplex",
    "SimplexGrid",
    "build_simplex_grid",
    "interpolate_value",
    "interpolate_prescription",
    "TeamSolution",
    "solve_team_finite",
    "solve_team_infinite",
    "GameSolution",
    "assemble_equilibrium",
    "solve_mfe_finite",
    "solve_mfe_infinite",
    "finite_with_terminal",
    "VerifyReport",
    "verify_mfe",
    "verify_paths",
    "brute_force_team",
    "classical_mfg_reference",
    "empirical_meanfield",
    "monte_carlo_value",
    "SolverWorkflow",
    "solve_and_certify",
]
