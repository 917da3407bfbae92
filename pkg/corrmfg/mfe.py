"""
Mean-field equilibria through per-stage fixed points.

At every grid node the prescription gamma must be a best response of a
focal agent to the continuation value evaluated at phi(z, gamma), the mean
field that gamma itself generates. Finite horizons are solved backward from
V_{T+1} = 0 (or a supplied terminal table); infinite horizons by outer value
iteration on the same stage problem.
"""

import logging
import itertools
from collections import namedtuple
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from tqdm import tqdm

from .config import SolverOptions
from .errors import HorizonMismatchError, NoFixedPointFoundError, NotConvergedError
from .grid import PolicyTable, SimplexGrid, ValueTable
from .meanfield import Trajectory, lambda_rollout, phi_update
from .model import (
    ValidatedModel,
    focal_kernel,
    kernel_tensor,
    others_action_probs,
    others_law,
    pure_prescriptions,
    reward_table,
)

logger = logging.getLogger(__name__)

FixedPointDiagnostics = namedtuple("FixedPointDiagnostics", ["method", "iterations", "residual"])

ASSEMBLE_MODES = ("interpolate", "resolve")
MIN_STEP = 1e-12


@dataclass
class GameSolution:
    """
    Equilibrium value functions V_t(z, x) and generating functions theta_t.

    ``values`` has shape (T+1, n_nodes, Nx) with ``values[T]`` the terminal
    table (zero unless supplied), or (1, n_nodes, Nx) for an infinite horizon.
    ``policies`` has shape (T, n_nodes, Nx, Na) or (1, n_nodes, Nx, Na).
    ``pure_fixed_points[t][node]`` lists every consistent pure prescription
    (as action-per-type tuples) when enumeration of all of them was requested.
    """

    grid: SimplexGrid
    values: np.ndarray
    policies: np.ndarray
    horizon: Optional[int]
    diagnostics: List[List[FixedPointDiagnostics]] = field(default_factory=list)
    residual_trace: List[float] = field(default_factory=list)
    pure_fixed_points: Optional[List[List[list]]] = None

    @property
    def stationary(self) -> bool:
        return self.horizon is None

    def value_table(self, t: int) -> ValueTable:
        """V_t as a callable; for stationary solutions every t maps to the same table."""
        return ValueTable(self.grid, self.values[0 if self.stationary else t - 1])

    def continuation(self, t: int) -> Optional[ValueTable]:
        """V_{t+1} seen from stage t; None when it is identically zero."""
        if self.stationary:
            return self.value_table(1)
        if t >= self.horizon and not np.any(self.values[self.horizon]):
            return None
        return ValueTable(self.grid, self.values[t])

    def policy_table(self) -> PolicyTable:
        return PolicyTable(self.grid, self.policies, stationary=self.stationary)


def focal_transition(model: ValidatedModel, z: np.ndarray, gamma_env: np.ndarray,
                     focal: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Focal agent's next-type law averaged over its block partners.

    p[x, a, x'] = sum_{x_o, a_o} z_o(x_o | x) prod_i gamma(a_o^i | x_o^i) Q_focal(x' | z, x_o, x, a_o, a)

    :param focal: focal-slot kernel at ``z`` (see model.focal_kernel), if already computed
    """
    if focal is None:
        focal = focal_kernel(model, z)
    return np.einsum(
        "xo,oq,poxqa->xap",
        others_law(model, z),
        others_action_probs(model, gamma_env),
        focal,
    )


def stage_q_values(model: ValidatedModel, z: np.ndarray, gamma_env: np.ndarray, v_next: Optional[Callable],
                   z_next: Optional[np.ndarray] = None, focal: Optional[np.ndarray] = None) -> np.ndarray:
    """
    One-stage deviation values q[x, a] of a focal agent facing ``gamma_env``.

    q[x, a] = R(x, a, z) + delta sum_x' p[x, a, x'] V_{t+1}(z_next, x')

    The continuation is read at ``z_next = phi(z, gamma_env)``, so it depends on
    the environment prescription only.
    """
    rewards = reward_table(model, z)
    if v_next is None or model.discount == 0.0:
        return rewards
    if z_next is None:
        z_next = phi_update(model, z, gamma_env)
    continuation = np.asarray(v_next(z_next), dtype=float)
    transition = focal_transition(model, z, gamma_env, focal=focal)
    return rewards + model.discount * transition @ continuation


def consistency_residual(gamma: np.ndarray, q: np.ndarray) -> float:
    """max_x (max_a q[x, a] - sum_a gamma(a|x) q[x, a])"""
    return float((q.max(axis=1) - (gamma * q).sum(axis=1)).max())


def best_response(q: np.ndarray, tol: float) -> np.ndarray:
    """Uniform mixture over the tol-argmax actions of every row."""
    top = q >= q.max(axis=1, keepdims=True) - tol
    return top / top.sum(axis=1, keepdims=True)


class _StageProblem:
    """Per-node quantities that do not depend on the candidate prescription."""

    def __init__(self, model: ValidatedModel, z: np.ndarray, v_next: Optional[Callable]):
        self.model = model
        self.z = np.asarray(z, dtype=float)
        self.v_next = v_next
        self.kernel = kernel_tensor(model, self.z)
        self.focal = focal_kernel(model, self.z) if v_next is not None else None

    def q_values(self, gamma: np.ndarray) -> np.ndarray:
        if self.v_next is None or self.model.discount == 0.0:
            return reward_table(self.model, self.z)
        z_next = phi_update(self.model, self.z, gamma, kernel=self.kernel)
        return stage_q_values(self.model, self.z, gamma, self.v_next, z_next=z_next, focal=self.focal)

    def residual(self, gamma: np.ndarray) -> float:
        return consistency_residual(gamma, self.q_values(gamma))


def consistent_pure_prescriptions(model: ValidatedModel, z: np.ndarray, v_next: Optional[Callable],
                                  eps: float, problem: Optional[_StageProblem] = None) -> list:
    """
    Every pure prescription that is an eps-consistent stage fixed point at ``z``.

    :param v_next: any callable continuation z -> vector over types, or None
    :returns: list of (actions per type, prescription, residual), lexicographic order
    """
    problem = problem or _StageProblem(model, z, v_next)
    choices = itertools.product(range(model.n_actions), repeat=model.n_states)
    found = []
    for choice, gamma in zip(choices, pure_prescriptions(model)):
        residual = problem.residual(gamma)
        if residual <= eps:
            found.append((choice, gamma, residual))
    return found


def _damped_iteration(problem: _StageProblem, start: np.ndarray, opts: SolverOptions):
    """
    gamma <- (1 - alpha) gamma + alpha BR(gamma), with the step of a row halved
    whenever that row's best response changes.
    """
    eps = opts.eps_consistency
    gamma = start.copy()
    steps = np.full(gamma.shape[0], opts.damping)
    previous = None
    residual = np.inf
    for iteration in range(1, opts.max_iter + 1):
        q = problem.q_values(gamma)
        residual = consistency_residual(gamma, q)
        if residual <= eps:
            return gamma, residual, iteration
        response = best_response(q, eps / 10.0)
        if previous is not None:
            flipped = np.any(np.abs(response - previous) > 0.0, axis=1)
            steps[flipped] = np.maximum(steps[flipped] * 0.5, MIN_STEP)
        previous = response
        gamma = (1.0 - steps[:, None]) * gamma + steps[:, None] * response
    return gamma, residual, opts.max_iter


def stage_fixed_point(model: ValidatedModel, z: np.ndarray, v_next: Optional[Callable],
                      opts: Optional[SolverOptions] = None, rng: Optional[np.random.Generator] = None,
                      collect_pure: bool = False):
    """
    Eps-consistent prescription of the per-stage fixed-point equation at ``z``.

    Method ladder: the lexicographically first consistent pure prescription;
    otherwise damped best-response iteration from every pure prescription and
    ``n_random_starts`` random mixed starts.

    :param collect_pure: also return the list of all consistent pure prescriptions
    :returns: (gamma, FixedPointDiagnostics) or, with ``collect_pure``,
        (gamma, FixedPointDiagnostics, list of actions-per-type tuples)
    :raises NoFixedPointFoundError: carrying the best residual seen
    """
    opts = opts or SolverOptions()
    eps = opts.eps_consistency
    problem = _StageProblem(model, z, v_next)

    pure = pure_prescriptions(model)
    if collect_pure:
        consistent = consistent_pure_prescriptions(model, z, v_next, eps, problem=problem)
        if consistent:
            _, gamma, residual = consistent[0]
            return gamma, FixedPointDiagnostics("pure-enumeration", len(pure), residual), [c[0] for c in consistent]
    else:
        for count, gamma in enumerate(pure, start=1):
            residual = problem.residual(gamma)
            if residual <= eps:
                return gamma, FixedPointDiagnostics("pure-enumeration", count, residual)

    rng = rng or np.random.default_rng(opts.seed)
    starts = list(pure) + [
        rng.dirichlet(np.ones(model.n_actions), size=model.n_states) for _ in range(opts.n_random_starts)
    ]
    best_residual = np.inf
    total = len(pure)
    for start in starts:
        gamma, residual, iterations = _damped_iteration(problem, start, opts)
        total += iterations
        best_residual = min(best_residual, residual)
        if residual <= eps:
            logger.debug(f"mixed stage fixed point after {iterations} damped iterations (residual {residual:.3e})")
            diagnostics = FixedPointDiagnostics("damped-iteration", total, residual)
            return (gamma, diagnostics, []) if collect_pure else (gamma, diagnostics)

    raise NoFixedPointFoundError(
        f"no per-stage fixed point within eps={eps:g} (best residual {best_residual:.3e})",
        residual=best_residual,
    )


def _node_rng(opts: SolverOptions, stage: int, node: int) -> np.random.Generator:
    return np.random.default_rng([opts.seed, stage, node])


def _solve_stage(model, grid, v_next, opts, stage, policies, values, diagnostics, pure_found, partial):
    """Fill one stage of the node tables; locate and re-raise fixed-point failures."""
    for node in tqdm(range(grid.n_nodes), desc=f"mfe stage {stage}", disable=not opts.progress, leave=False):
        z = grid.nodes[node]
        try:
            result = stage_fixed_point(
                model, z, v_next, opts, rng=_node_rng(opts, stage, node), collect_pure=opts.enumerate_all_pure
            )
        except NoFixedPointFoundError as exc:
            located = exc.locate(stage, node)
            located.partial_solution = partial()
            raise located from exc
        gamma, diag = result[0], result[1]
        if opts.enumerate_all_pure:
            pure_found.append([list(choice) for choice in result[2]])
        q = stage_q_values(model, z, gamma, v_next)
        policies[node] = gamma
        values[node] = (gamma * q).sum(axis=1)
        diagnostics.append(diag)
        if diag.method != "pure-enumeration":
            logger.warning(f"stage {stage}, node {node}: only a mixed fixed point found (residual {diag.residual:.3e})")


def solve_mfe_finite(model: ValidatedModel, horizon: int, grid: SimplexGrid,
                     opts: Optional[SolverOptions] = None, terminal: Optional[np.ndarray] = None) -> GameSolution:
    """
    Backward per-stage fixed-point recursion for a finite-horizon game.

    :param horizon: number of stages T
    :param terminal: optional V_{T+1} node table, shape (n_nodes, Nx); zero if omitted
    :raises NoFixedPointFoundError: located at the failing stage and node, with
        the stages solved so far attached as ``partial_solution``
    """
    opts = (opts or SolverOptions()).validate()
    n_nodes, nx, na = grid.n_nodes, model.n_states, model.n_actions
    values = np.zeros((horizon + 1, n_nodes, nx))
    if terminal is not None:
        terminal = np.asarray(terminal, dtype=float)
        if terminal.shape != (n_nodes, nx):
            raise ValueError(f"terminal table must have shape {(n_nodes, nx)}, got {terminal.shape}")
        values[horizon] = terminal
    policies = np.zeros((horizon, n_nodes, nx, na))
    diagnostics: List[List[FixedPointDiagnostics]] = [[] for _ in range(horizon)]
    pure_found: Optional[List[List[list]]] = [[] for _ in range(horizon)] if opts.enumerate_all_pure else None

    def partial():
        return GameSolution(grid, values.copy(), policies.copy(), horizon, diagnostics, [], pure_found)

    for t in range(horizon, 0, -1):
        v_next = None if (t == horizon and terminal is None) else ValueTable(grid, values[t])
        _solve_stage(
            model, grid, v_next, opts, t, policies[t - 1], values[t - 1], diagnostics[t - 1],
            pure_found[t - 1] if pure_found is not None else [], partial,
        )
        logger.info(f"mfe stage {t} solved on {n_nodes} nodes")

    return GameSolution(grid, values, policies, horizon, diagnostics, [], pure_found)


def finite_with_terminal(model: ValidatedModel, horizon: int, terminal: np.ndarray, grid: SimplexGrid,
                         opts: Optional[SolverOptions] = None) -> GameSolution:
    """Finite-horizon game with terminal reward V_{T+1} = ``terminal`` instead of 0."""
    return solve_mfe_finite(model, horizon, grid, opts, terminal=terminal)


def solve_mfe_infinite(model: ValidatedModel, grid: SimplexGrid, tol: Optional[float] = None,
                       max_iter: Optional[int] = None, opts: Optional[SolverOptions] = None) -> GameSolution:
    """
    Coupled (gamma, V) fixed point of the discounted infinite-horizon game.

    Outer value iteration: solve the stage fixed point at every node against
    V^k, set V^{k+1}(node, x) = sum_a gamma(a|x) q[x, a], stop at
    sup |V^{k+1} - V^k| <= tol.

    :raises NotConvergedError: after ``max_iter`` iterations, with the last iterate attached
    """
    opts = (opts or SolverOptions()).validate()
    if model.discount >= 1.0:
        raise ValueError("infinite-horizon value iteration needs a discount below 1")
    tol = opts.vi_tol if tol is None else tol
    max_iter = opts.vi_max_iter if max_iter is None else max_iter

    n_nodes, nx, na = grid.n_nodes, model.n_states, model.n_actions
    values = np.zeros((n_nodes, nx))
    policies = np.zeros((n_nodes, nx, na))
    diagnostics: List[FixedPointDiagnostics] = []
    pure_found: list = []
    trace: List[float] = []

    def solution(current_values, current_policies):
        pure = [pure_found] if opts.enumerate_all_pure else None
        return GameSolution(grid, current_values[None], current_policies[None], None, [diagnostics], list(trace), pure)

    for iteration in range(1, max_iter + 1):
        v_next = ValueTable(grid, values.copy())
        new_values = np.empty_like(values)
        new_policies = np.empty_like(policies)
        diagnostics = []
        pure_found = []
        _solve_stage(
            model, grid, v_next, opts, iteration, new_policies, new_values, diagnostics, pure_found,
            lambda: solution(values, policies),
        )
        residual = float(np.abs(new_values - values).max())
        trace.append(residual)
        values, policies = new_values, new_policies
        logger.debug(f"mfe value iteration {iteration}: residual {residual:.3e}")
        if residual <= tol:
            logger.info(f"mfe value iteration converged after {iteration} iterations (residual {residual:.3e})")
            return solution(values, policies)

    raise NotConvergedError(
        f"mfe value iteration did not reach tol={tol:g} in {max_iter} iterations (residual {trace[-1]:.3e})",
        residual=trace[-1],
        partial_solution=solution(values, policies),
    )


def bellman_residual(model: ValidatedModel, solution: GameSolution) -> float:
    """
    max over stages, nodes and types of |V(node, x) - sum_a gamma(a|x) q[x, a]|,
    with q recomputed from the stored prescriptions and continuation tables.
    """
    grid = solution.grid
    worst = 0.0
    for stage in range(len(solution.policies)):
        t = stage + 1
        v_next = solution.continuation(t)
        for node in range(grid.n_nodes):
            gamma = solution.policies[stage, node]
            q = stage_q_values(model, grid.nodes[node], gamma, v_next)
            rhs = (gamma * q).sum(axis=1)
            worst = max(worst, float(np.abs(solution.values[stage, node] - rhs).max()))
    return worst


class ResolvedGamePolicy:
    """
    Generating function evaluated by solving the stage fixed point at the
    realised mean field against the stored continuation tables.
    """

    def __init__(self, model: ValidatedModel, solution: GameSolution, opts: Optional[SolverOptions] = None):
        self.model = model
        self.solution = solution
        self.opts = opts or SolverOptions(progress=False)

    def __call__(self, t: int, z: np.ndarray) -> np.ndarray:
        rng = np.random.default_rng([self.opts.seed, t])
        gamma, _ = stage_fixed_point(self.model, z, self.solution.continuation(t), self.opts, rng=rng)
        return gamma


def assemble_equilibrium(model: ValidatedModel, z1: np.ndarray, solution: GameSolution,
                         horizon: Optional[int] = None, mode: str = "interpolate",
                         opts: Optional[SolverOptions] = None):
    """
    Forward pass gamma_t = theta_t[z_t], z_{t+1} = phi(z_t, gamma_t).

    The equilibrium strategy is sigma_t(a | z_{1:t}, x_{1:t}) = gamma_t(a | x_t).

    :param horizon: number of stages; defaults to the solution's horizon and is
        required for stationary solutions
    :param mode: ``interpolate`` blends tabulated prescriptions, ``resolve``
        re-solves the stage fixed point at each visited mean field
    :returns: (list of prescriptions, Trajectory)
    """
    if mode not in ASSEMBLE_MODES:
        raise ValueError(f"assemble mode must be one of {ASSEMBLE_MODES}, got {mode!r}")
    if horizon is None:
        if solution.stationary:
            raise HorizonMismatchError("a stationary solution needs an explicit assembly horizon")
        horizon = solution.horizon
    if not solution.stationary and horizon > solution.horizon:
        raise HorizonMismatchError(f"solution covers {solution.horizon} stages, assembly needs {horizon}")

    source = solution.policy_table() if mode == "interpolate" else ResolvedGamePolicy(model, solution, opts)
    trajectory: Trajectory = lambda_rollout(model, z1, source, horizon)
    return list(trajectory.prescriptions), trajectory
