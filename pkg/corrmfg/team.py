"""
Mean-field team optimal (MFTO) prescriptions.

Finite horizon: backward dynamic programming over the simplex grid,
V_{T+1} = 0 and V_t(z) = max_gamma E[R] + delta V_{t+1}(phi(z, gamma)).
Infinite horizon: value iteration on the same node table.
"""

import logging
from collections import namedtuple
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy.optimize import minimize_scalar
from tqdm import tqdm

from .config import SolverOptions
from .errors import NotConvergedError
from .grid import PolicyTable, SimplexGrid, ValueTable
from .meanfield import PrescriptionSource, check_source_horizon, phi_update, prescription_at
from .model import ValidatedModel, kernel_tensor, marginal, pure_prescriptions, reward_bound, reward_table

logger = logging.getLogger(__name__)

NodeDiagnostics = namedtuple("NodeDiagnostics", ["method", "iterations", "residual", "objective"])


@dataclass
class TeamSolution:
    """
    Team value functions and optimal prescriptions on a grid.

    ``values`` has shape (T+1, n_nodes) with ``values[T] == 0`` (finite
    horizon) or (1, n_nodes) (infinite horizon); ``policies`` has shape
    (T, n_nodes, Nx, Na) or (1, n_nodes, Nx, Na).
    """

    grid: SimplexGrid
    values: np.ndarray
    policies: np.ndarray
    horizon: Optional[int]
    diagnostics: List[List[NodeDiagnostics]] = field(default_factory=list)
    residual_trace: List[float] = field(default_factory=list)

    @property
    def stationary(self) -> bool:
        return self.horizon is None

    def value_table(self, t: int) -> ValueTable:
        return ValueTable(self.grid, self.values[0 if self.stationary else t - 1])

    def policy_table(self) -> PolicyTable:
        return PolicyTable(self.grid, self.policies, stationary=self.stationary)


def stage_team_objective(model: ValidatedModel, z: np.ndarray, gamma: np.ndarray,
                         v_next: Optional[Callable] = None, kernel: Optional[np.ndarray] = None) -> float:
    """
    Stage objective sum_x m(z)(x) sum_a gamma(a|x) R(x,a,z) + delta V_{t+1}(phi(z, gamma)).

    :param v_next: continuation value (a ValueTable or any callable); None means 0
    :param kernel: the mixed kernel at ``z``, if already computed
    """
    expected = float(marginal(model, z) @ (gamma * reward_table(model, z)).sum(axis=1))
    if v_next is None or model.discount == 0.0:
        return expected
    z_next = phi_update(model, z, gamma, kernel=kernel)
    return expected + model.discount * float(v_next(z_next))


def _ascend(objective, gamma, value, opts: SolverOptions):
    """
    Projected coordinate ascent: move one row of gamma at a time toward each
    action vertex, with a bounded scalar search on the step.
    """
    n_states, n_actions = gamma.shape
    eye = np.eye(n_actions)
    sweeps = 0
    stalled = True
    for sweeps in range(1, opts.max_local_iter + 1):
        improved = False
        for x in range(n_states):
            for a in range(n_actions):
                row = gamma[x].copy()
                if row[a] == 1.0:
                    continue

                def step(s, x=x, a=a, row=row):
                    trial = gamma.copy()
                    trial[x] = (1.0 - s) * row + s * eye[a]
                    return trial

                search = minimize_scalar(
                    lambda s: -objective(step(s)),
                    bounds=(0.0, 1.0),
                    method="bounded",
                    options={"xatol": 1e-10},
                )
                for s in (float(search.x), 1.0):
                    candidate = step(s)
                    candidate_value = objective(candidate)
                    if candidate_value > value + opts.opt_tol:
                        gamma, value, improved = candidate, candidate_value, True
        if not improved:
            stalled = False
            break
    return gamma, value, sweeps, stalled


def optimize_prescription(model: ValidatedModel, z: np.ndarray, v_next: Optional[Callable],
                          opts: Optional[SolverOptions] = None, rng: Optional[np.random.Generator] = None,
                          warm_start: Optional[np.ndarray] = None):
    """
    Best prescription found for the stage team problem at ``z``.

    All Na^Nx pure prescriptions are enumerated first (the lexicographically
    first one wins ties). When the continuation is non-trivial, projected
    coordinate ascent is run from the best pure point, from ``warm_start`` and
    from random mixed starts; a mixed point replaces the incumbent only if it
    improves by more than ``opt_tol``.

    :returns: (gamma, objective, NodeDiagnostics)
    """
    opts = opts or SolverOptions()
    kernel = kernel_tensor(model, z)

    def objective(gamma):
        return stage_team_objective(model, z, gamma, v_next, kernel=kernel)

    best_gamma, best_value = None, -np.inf
    for gamma in pure_prescriptions(model):
        value = objective(gamma)
        if value > best_value:
            best_gamma, best_value = gamma, value

    # With no continuation the objective is linear in each row: pure is exact.
    if v_next is None or model.discount == 0.0 or model.n_actions == 1:
        return best_gamma, best_value, NodeDiagnostics("pure-exact", 0, 0.0, best_value)

    rng = rng or np.random.default_rng(opts.seed)
    starts = [best_gamma]
    if warm_start is not None:
        starts.append(np.asarray(warm_start, dtype=float))
    starts.extend(rng.dirichlet(np.ones(model.n_actions), size=model.n_states) for _ in range(opts.n_random_starts))

    total_sweeps = 0
    any_stalled = False
    for start in starts:
        gamma, value, sweeps, stalled = _ascend(objective, start.copy(), objective(start), opts)
        total_sweeps += sweeps
        any_stalled = any_stalled or stalled
        if value > best_value + opts.opt_tol:
            best_gamma, best_value = gamma, value

    method = "local_only" if any_stalled else "ascent"
    if any_stalled:
        logger.warning(f"prescription ascent hit max_local_iter={opts.max_local_iter}; result is local only")
    return best_gamma, best_value, NodeDiagnostics(method, total_sweeps, 0.0, best_value)


def _node_rng(opts: SolverOptions, stage: int, node: int) -> np.random.Generator:
    return np.random.default_rng([opts.seed, stage, node])


def solve_team_finite(model: ValidatedModel, horizon: int, grid: SimplexGrid,
                      opts: Optional[SolverOptions] = None) -> TeamSolution:
    """
    Backward dynamic program for the finite-horizon team.

    :param horizon: number of stages T
    :param grid: simplex grid of dimension Nx^N
    """
    opts = (opts or SolverOptions()).validate()
    n_nodes = grid.n_nodes
    values = np.zeros((horizon + 1, n_nodes))
    policies = np.zeros((horizon, n_nodes, model.n_states, model.n_actions))
    diagnostics: List[List[NodeDiagnostics]] = [[] for _ in range(horizon)]

    for t in range(horizon, 0, -1):
        v_next = None if t == horizon else ValueTable(grid, values[t])
        for node in tqdm(range(n_nodes), desc=f"team stage {t}", disable=not opts.progress):
            gamma, value, diag = optimize_prescription(
                model, grid.nodes[node], v_next, opts, rng=_node_rng(opts, t, node)
            )
            policies[t - 1, node] = gamma
            values[t - 1, node] = value
            diagnostics[t - 1].append(diag)
        logger.info(f"team stage {t} solved on {n_nodes} nodes")

    return TeamSolution(grid, values, policies, horizon, diagnostics)


def solve_team_infinite(model: ValidatedModel, grid: SimplexGrid, tol: Optional[float] = None,
                        max_iter: Optional[int] = None, opts: Optional[SolverOptions] = None) -> TeamSolution:
    """
    Value iteration for the discounted infinite-horizon team.

    Stops when the sup-norm change over nodes is at most ``tol``.

    :raises NotConvergedError: after ``max_iter`` iterations; carries the last
        residual and the last iterate as ``partial_solution``
    """
    opts = (opts or SolverOptions()).validate()
    if model.discount >= 1.0:
        raise ValueError("infinite-horizon value iteration needs a discount below 1")
    tol = opts.vi_tol if tol is None else tol
    max_iter = opts.vi_max_iter if max_iter is None else max_iter

    n_nodes = grid.n_nodes
    values = np.zeros(n_nodes)
    policies = np.zeros((n_nodes, model.n_states, model.n_actions))
    diagnostics: List[NodeDiagnostics] = []
    trace: List[float] = []

    for iteration in range(1, max_iter + 1):
        v_next = ValueTable(grid, values.copy())
        new_values = np.empty(n_nodes)
        diagnostics = []
        for node in tqdm(range(n_nodes), desc=f"team VI {iteration}", disable=not opts.progress, leave=False):
            warm = policies[node] if iteration > 1 else None
            gamma, value, diag = optimize_prescription(
                model, grid.nodes[node], v_next, opts, rng=_node_rng(opts, iteration, node), warm_start=warm
            )
            policies[node] = gamma
            new_values[node] = value
            diagnostics.append(diag)
        residual = float(np.abs(new_values - values).max())
        trace.append(residual)
        values = new_values
        logger.debug(f"team value iteration {iteration}: residual {residual:.3e}")
        if residual <= tol:
            logger.info(f"team value iteration converged after {iteration} iterations (residual {residual:.3e})")
            return TeamSolution(grid, values[None, :], policies[None], None, [diagnostics], trace)

    partial = TeamSolution(grid, values[None, :], policies[None], None, [diagnostics], trace)
    raise NotConvergedError(
        f"team value iteration did not reach tol={tol:g} in {max_iter} iterations (residual {trace[-1]:.3e})",
        residual=trace[-1],
        partial_solution=partial,
    )


def team_value_of_policy(model: ValidatedModel, z1: np.ndarray, source: PrescriptionSource, horizon: int) -> float:
    """
    Population-averaged discounted reward of a prescription source from ``z1``.

    sum_t delta^(t-1) sum_x m(z_t)(x) sum_a gamma_t(a|x) R(x, a, z_t)
    """
    check_source_horizon(source, horizon)
    z = np.asarray(z1, dtype=float)
    total, weight = 0.0, 1.0
    for t in range(1, horizon + 1):
        gamma = prescription_at(source, t, z)
        total += weight * stage_team_objective(model, z, gamma)
        z = phi_update(model, z, gamma)
        weight *= model.discount
    return total


def truncation_tail_bound(model: ValidatedModel, horizon: int) -> float:
    """Bound delta^T R_max / (1 - delta) on the reward beyond ``horizon`` stages."""
    if model.discount >= 1.0:
        return np.inf
    return model.discount ** horizon * reward_bound(model) / (1.0 - model.discount)


class ResolvedTeamPolicy:
    """
    Rollout policy that re-optimises the stage team problem at the realised
    mean field against the stored continuation table, instead of
    interpolating tabulated prescriptions.
    """

    def __init__(self, model: ValidatedModel, solution: TeamSolution, opts: Optional[SolverOptions] = None):
        self.model = model
        self.solution = solution
        self.opts = opts or SolverOptions(progress=False)

    def __call__(self, t: int, z: np.ndarray) -> np.ndarray:
        solution = self.solution
        if solution.stationary:
            v_next = solution.value_table(1)
        else:
            v_next = None if t >= solution.horizon else ValueTable(solution.grid, solution.values[t])
        rng = np.random.default_rng([self.opts.seed, t])
        gamma, _, _ = optimize_prescription(self.model, z, v_next, self.opts, rng=rng)
        return gamma
