"""
Independent certification oracles.

Nothing here reuses the solver's stage machinery: focal transition laws are
rebuilt from ``focal_next_state_law`` with explicit loops, and deviations are
checked with an exact single-agent dynamic program in which the mean-field
path is frozen (a lone deviator cannot move z).
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from .errors import HorizonMismatchError, OracleTooLargeError
from .grid import compositions_of
from .meanfield import lambda_rollout, phi_update
from .mfe import assemble_equilibrium
from .model import (
    ValidatedModel,
    focal_next_state_law,
    joint_index,
    marginal,
    others_law,
    pure_prescriptions,
    reward_bound,
    reward_table,
)

logger = logging.getLogger(__name__)

CERTIFIED = "CERTIFIED_EPS"
REFUTED = "REFUTED"

CONSISTENCY_TOL = 1e-12
ORACLE_CAP = 2_000_000

TerminalValue = Union[None, np.ndarray, Callable[[np.ndarray], np.ndarray]]


@dataclass
class VerifyReport:
    """
    Outcome of an equilibrium certificate.

    ``per_stage_gains[t-1, x]`` is the best deviation gain from (t, x), tail
    bound included; ``witness`` names the stage, type and first deviating
    action of the largest gain when the verdict is REFUTED.
    """

    consistency_residual: float
    max_deviation_gain: float
    per_stage_gains: np.ndarray
    verdict: str
    eps: float
    consistency_tol: float = CONSISTENCY_TOL
    tail_bound: float = 0.0
    witness: Optional[dict] = None
    horizon: int = 0

    @property
    def certified(self) -> bool:
        return self.verdict == CERTIFIED

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "eps": self.eps,
            "consistency_residual": self.consistency_residual,
            "consistency_tol": self.consistency_tol,
            "max_deviation_gain": self.max_deviation_gain,
            "tail_bound": self.tail_bound,
            "horizon": self.horizon,
            "per_stage_gains": np.asarray(self.per_stage_gains).tolist(),
            "witness": self.witness,
        }


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def check_consistency(model: ValidatedModel, gammas: Sequence[np.ndarray], zpath: Sequence[np.ndarray]) -> float:
    """
    Largest total-variation distance between ``zpath`` and the path that
    ``gammas`` generate from ``zpath[0]``.

    :raises HorizonMismatchError: unless ``len(zpath) == len(gammas) + 1``
    """
    if len(zpath) != len(gammas) + 1:
        raise HorizonMismatchError(f"{len(gammas)} prescriptions need {len(gammas) + 1} mean fields, got {len(zpath)}")
    z = np.asarray(zpath[0], dtype=float)
    worst = 0.0
    for gamma, supplied in zip(gammas, zpath[1:]):
        z = phi_update(model, z, np.asarray(gamma, dtype=float))
        worst = max(worst, total_variation(z, supplied))
    return worst


def focal_law(model: ValidatedModel, z: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """
    p[x, a, x'] averaged over block partners, built one (x_others, a_others)
    pair at a time from ``focal_next_state_law``.
    """
    nx, na, n_others = model.n_states, model.n_actions, model.n_corr - 1
    partner_law = others_law(model, z)
    law = np.zeros((nx, na, nx))
    for x_others in itertools.product(range(nx), repeat=n_others):
        o = joint_index(x_others, nx)
        for a_others in itertools.product(range(na), repeat=n_others):
            action_weight = 1.0
            for xi, ai in zip(x_others, a_others):
                action_weight *= gamma[xi, ai]
            if action_weight == 0.0:
                continue
            for x in range(nx):
                weight = partner_law[x, o] * action_weight
                if weight == 0.0:
                    continue
                for a in range(na):
                    law[x, a] += weight * focal_next_state_law(model, z, x_others, x, a_others, a)
    return law


def _terminal_vector(model: ValidatedModel, v_terminal: TerminalValue, z_last: np.ndarray) -> np.ndarray:
    if v_terminal is None:
        return np.zeros(model.n_states)
    if callable(v_terminal):
        return np.asarray(v_terminal(z_last), dtype=float)
    return np.asarray(v_terminal, dtype=float)


def deviation_tables(model: ValidatedModel, zpath: Sequence[np.ndarray], gammas: Sequence[np.ndarray],
                     v_terminal: TerminalValue = None):
    """
    Backward recursion of the frozen-path single-agent MDP.

    :returns: (D, W, Q) where D[t-1, x] is the optimal reward-to-go, W[t-1, x]
        the reward-to-go of the prescription path and Q[t-1, x, a] the
        one-stage deviation values against D_{t+1}; row T is the terminal value
    """
    if len(zpath) != len(gammas) + 1:
        raise HorizonMismatchError(f"{len(gammas)} prescriptions need {len(gammas) + 1} mean fields, got {len(zpath)}")
    horizon, nx, na = len(gammas), model.n_states, model.n_actions
    delta = model.discount
    best = np.zeros((horizon + 1, nx))
    follow = np.zeros((horizon + 1, nx))
    deviations = np.zeros((horizon, nx, na))
    best[horizon] = follow[horizon] = _terminal_vector(model, v_terminal, zpath[-1])

    for t in range(horizon, 0, -1):
        z, gamma = np.asarray(zpath[t - 1], dtype=float), np.asarray(gammas[t - 1], dtype=float)
        rewards = reward_table(model, z)
        law = focal_law(model, z, gamma) if delta > 0.0 else np.zeros((nx, na, nx))
        deviations[t - 1] = rewards + delta * law @ best[t]
        best[t - 1] = deviations[t - 1].max(axis=1)
        follow[t - 1] = (gamma * (rewards + delta * law @ follow[t])).sum(axis=1)
    return best, follow, deviations


def best_deviation_gain(model: ValidatedModel, zpath: Sequence[np.ndarray], gammas: Sequence[np.ndarray],
                        v_terminal: TerminalValue = None, t0: int = 1, x0: int = 0) -> float:
    """Gain D_{t0}(x0) - W_{t0}(x0) of the best unilateral deviation from (t0, x0)."""
    if not 1 <= t0 <= len(gammas):
        raise HorizonMismatchError(f"t0={t0} outside stages 1..{len(gammas)}")
    best, follow, _ = deviation_tables(model, zpath, gammas, v_terminal)
    return float(best[t0 - 1, x0] - follow[t0 - 1, x0])


def verify_paths(model: ValidatedModel, gammas: Sequence[np.ndarray], zpath: Sequence[np.ndarray], eps: float,
                 v_terminal: TerminalValue = None, tail_bound: float = 0.0,
                 consistency_tol: float = CONSISTENCY_TOL) -> VerifyReport:
    """
    Certificate for an explicit (prescription path, mean-field path) pair.

    CERTIFIED_EPS iff the path is consistent within ``consistency_tol`` and no
    (t, x) admits a deviation gaining more than ``eps`` (``tail_bound`` added).
    """
    residual = check_consistency(model, gammas, zpath)
    best, follow, deviations = deviation_tables(model, zpath, gammas, v_terminal)
    gains = best[:-1] - follow[:-1] + tail_bound
    t_idx, x_idx = np.unravel_index(int(np.argmax(gains)), gains.shape)
    max_gain = float(gains[t_idx, x_idx])

    certified = residual <= consistency_tol and max_gain <= eps
    witness = None
    if not certified:
        witness = {
            "stage": int(t_idx) + 1,
            "type": int(x_idx),
            "action": int(np.argmax(deviations[t_idx, x_idx])),
            "gain": max_gain,
        }
        logger.info(f"certificate refuted: consistency {residual:.3e}, gain {max_gain:.3e} "
                    f"at stage {t_idx + 1}, type {x_idx}")
    return VerifyReport(
        consistency_residual=residual,
        max_deviation_gain=max_gain,
        per_stage_gains=gains,
        verdict=CERTIFIED if certified else REFUTED,
        eps=eps,
        consistency_tol=consistency_tol,
        tail_bound=tail_bound,
        witness=witness,
        horizon=len(gammas),
    )


def truncation_horizon(model: ValidatedModel, eps: float) -> int:
    """Smallest T' whose two-sided tail 2 delta^T' R_max / (1 - delta) is at most eps / 2."""
    bound = reward_bound(model)
    if model.discount == 0.0 or bound == 0.0:
        return 1
    target = eps * (1.0 - model.discount) / (4.0 * bound)
    return max(1, math.ceil(math.log(target) / math.log(model.discount)))


def verify_mfe(model: ValidatedModel, solution, z1: np.ndarray, horizon: Optional[int] = None, eps: float = 1e-5,
               mode: str = "interpolate", consistency_tol: float = CONSISTENCY_TOL, opts=None):
    """
    Assemble the equilibrium encoded by ``solution`` from ``z1`` and certify it.

    Stationary solutions are truncated at ``horizon`` (chosen from ``eps`` when
    omitted) and every gain is charged the two-sided tail
    2 delta^T' R_max / (1 - delta).

    :returns: (VerifyReport, prescriptions, Trajectory)
    """
    tail = 0.0
    v_terminal = None
    if solution.stationary:
        horizon = truncation_horizon(model, eps) if horizon is None else horizon
        tail = 2.0 * model.discount ** horizon * reward_bound(model) / (1.0 - model.discount)
    else:
        horizon = solution.horizon if horizon is None else horizon
        if horizon == solution.horizon:
            v_terminal = solution.continuation(horizon)
    gammas, trajectory = assemble_equilibrium(model, z1, solution, horizon, mode=mode, opts=opts)
    report = verify_paths(model, gammas, trajectory.meanfields, eps, v_terminal=v_terminal,
                          tail_bound=tail, consistency_tol=consistency_tol)
    logger.info(f"verify_mfe: {report.verdict} (consistency {report.consistency_residual:.3e}, "
                f"max gain {report.max_deviation_gain:.3e}, T={horizon})")
    return report, gammas, trajectory


def mixed_prescriptions(model: ValidatedModel, mix_resolution: int) -> List[np.ndarray]:
    """
    Prescriptions whose rows lie on the simplex grid of resolution
    ``mix_resolution``; 0 gives the pure prescriptions only.
    """
    if mix_resolution <= 0:
        return pure_prescriptions(model)
    rows = np.array(compositions_of(mix_resolution, model.n_actions), dtype=float) / mix_resolution
    return [rows[list(choice)] for choice in itertools.product(range(len(rows)), repeat=model.n_states)]


def brute_force_team(model: ValidatedModel, z1: np.ndarray, horizon: int, mix_resolution: int = 0,
                     cap: int = ORACLE_CAP) -> float:
    """
    Best team value over symmetric Markov prescription sequences.

    Stages 1..T-1 range over ``mixed_prescriptions``; the last stage is linear
    in the prescription, so its pure maximum is exact.

    :raises OracleTooLargeError: if the number of sequences exceeds ``cap``
    """
    early = mixed_prescriptions(model, mix_resolution) if horizon > 1 else []
    n_sequences = len(early) ** (horizon - 1) * model.n_actions ** model.n_states
    if n_sequences > cap:
        raise OracleTooLargeError(f"brute-force team oracle needs {n_sequences} sequences, cap is {cap}")
    delta = model.discount

    def stage_reward(z, gamma):
        return float(marginal(model, z) @ (gamma * reward_table(model, z)).sum(axis=1))

    def search(t, z, weight):
        if t == horizon:
            return weight * float(marginal(model, z) @ reward_table(model, z).max(axis=1))
        return max(
            weight * stage_reward(z, gamma) + search(t + 1, phi_update(model, z, gamma), weight * delta)
            for gamma in early
        )

    value = search(1, np.asarray(z1, dtype=float), 1.0)
    logger.debug(f"brute-force team value {value!r} over {n_sequences} sequences")
    return value


def pure_mfe_by_definition(model: ValidatedModel, z1: np.ndarray, horizon: int, eps: float = 1e-9,
                           cap: int = ORACLE_CAP) -> list:
    """
    Every pure Markov prescription sequence that is an MFE by direct check:
    the path it generates is used as the frozen mean field and no deviation
    gains more than ``eps``.

    :returns: list of (actions-per-type tuple for each stage, prescriptions, mean-field path)
    """
    pure = pure_prescriptions(model)
    n_sequences = len(pure) ** horizon
    if n_sequences > cap:
        raise OracleTooLargeError(f"pure MFE enumeration needs {n_sequences} sequences, cap is {cap}")
    choices = list(itertools.product(range(model.n_actions), repeat=model.n_states))
    found = []
    for sequence in itertools.product(range(len(pure)), repeat=horizon):
        gammas = [pure[i] for i in sequence]
        zpath = lambda_rollout(model, z1, gammas, horizon).meanfields
        best, follow, _ = deviation_tables(model, zpath, gammas)
        if float((best[:-1] - follow[:-1]).max()) <= eps:
            found.append((tuple(choices[i] for i in sequence), gammas, zpath))
    return found
