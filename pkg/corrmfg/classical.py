"""
Classical (independent-types) mean-field game solver for N = 1.

Written separately from the correlated solver so the two can be checked
against each other: the mean field is a plain distribution over X, the
kernel is P(x' | z, x, a) and every quantity is formed directly from the
model arrays. Only the grid and the model/solution types are shared.
"""

import itertools
import logging
from typing import Optional

import numpy as np
from tqdm import tqdm

from .config import SolverOptions
from .errors import NoFixedPointFoundError, RequiresN1Error
from .grid import SimplexGrid, interpolate_value
from .mfe import FixedPointDiagnostics, GameSolution
from .model import NEGATIVE_CLAMP, ValidatedModel

logger = logging.getLogger(__name__)


def _kernel(model: ValidatedModel, z: np.ndarray) -> np.ndarray:
    weights = model.weight_const + model.weight_coeffs @ z
    return np.einsum("k,kpxa->pxa", weights, model.base_tensors)


def _reward(model: ValidatedModel, z: np.ndarray) -> np.ndarray:
    return model.reward_base + np.einsum("m,mxa->xa", model.reward_selectors @ z, model.reward_coeffs)


def _gap(gamma: np.ndarray, q: np.ndarray) -> float:
    return float(np.max(q.max(axis=1) - np.sum(gamma * q, axis=1)))


def classical_mfg_reference(model: ValidatedModel, horizon: int, grid: SimplexGrid,
                            opts: Optional[SolverOptions] = None) -> GameSolution:
    """
    Backward recursion of a finite-horizon N = 1 mean-field game on ``grid``.

    :raises RequiresN1Error: if the model correlates more than one agent
    :raises NoFixedPointFoundError: if no stage equilibrium is found at a node
    """
    if model.n_corr != 1:
        raise RequiresN1Error(f"the classical reference needs n_corr = 1, model has {model.n_corr}")
    opts = opts or SolverOptions()
    eps, delta = opts.eps_consistency, model.discount
    nx, na = model.n_states, model.n_actions
    eye = np.eye(na)
    choices = list(itertools.product(range(na), repeat=nx))

    values = np.zeros((horizon + 1, grid.n_nodes, nx))
    policies = np.zeros((horizon, grid.n_nodes, nx, na))
    diagnostics = [[] for _ in range(horizon)]

    for t in range(horizon, 0, -1):
        table = values[t] if t < horizon else None
        for node in tqdm(range(grid.n_nodes), desc=f"classical stage {t}", disable=not opts.progress, leave=False):
            z = grid.nodes[node]
            kernel = _kernel(model, z)
            reward = _reward(model, z)

            def q_of(gamma):
                if table is None or delta == 0.0:
                    return reward
                z_next = np.einsum("pxa,x,xa->p", kernel, z, gamma)
                z_next[(z_next < 0.0) & (z_next >= -NEGATIVE_CLAMP)] = 0.0
                continuation = interpolate_value(grid, table, z_next)
                return reward + delta * np.einsum("pxa,p->xa", kernel, continuation)

            chosen, method, count = None, "pure-enumeration", 0
            for choice in choices:
                count += 1
                gamma = eye[list(choice)]
                if _gap(gamma, q_of(gamma)) <= eps:
                    chosen = gamma
                    break

            if chosen is None:
                method = "damped-iteration"
                rng = np.random.default_rng([opts.seed, t, node])
                starts = [eye[list(c)] for c in choices]
                starts += [rng.dirichlet(np.ones(na), size=nx) for _ in range(opts.n_random_starts)]
                best = np.inf
                for start in starts:
                    gamma, steps, last = start.copy(), np.full(nx, opts.damping), None
                    for _ in range(opts.max_iter):
                        count += 1
                        q = q_of(gamma)
                        gap = _gap(gamma, q)
                        best = min(best, gap)
                        if gap <= eps:
                            chosen = gamma
                            break
                        top = q >= q.max(axis=1, keepdims=True) - eps / 10.0
                        response = top / top.sum(axis=1, keepdims=True)
                        if last is not None:
                            changed = np.any(response != last, axis=1)
                            steps[changed] = np.maximum(steps[changed] / 2.0, 1e-12)
                        last = response
                        gamma = (1.0 - steps[:, None]) * gamma + steps[:, None] * response
                    if chosen is not None:
                        break
                if chosen is None:
                    raise NoFixedPointFoundError(
                        f"classical reference: no stage equilibrium at stage {t}, node {node} (best {best:.3e})",
                        residual=best, stage=t, node=node,
                    )

            q = q_of(chosen)
            policies[t - 1, node] = chosen
            values[t - 1, node] = np.sum(chosen * q, axis=1)
            diagnostics[t - 1].append(FixedPointDiagnostics(method, count, _gap(chosen, q)))
        logger.debug(f"classical reference stage {t} done")

    return GameSolution(grid, values, policies, horizon, diagnostics)
