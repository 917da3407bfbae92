"""
Monte-Carlo simulation of finite populations of correlated N-blocks.

A population of M blocks is simulated as M independent blocks coupled only
through the deterministic mean-field path: every block draws its actions from
gamma_t and its next joint type from Q(. | z_t, jx, ja) with z_t taken from the
rollout, not from the empirical population.

Categorical draws use Vose's alias method on integer weights, so a given seed
produces the same samples on every platform. Blocks are processed in fixed
chunks, each with its own stream ``default_rng([seed, chunk])``, so results do
not depend on how the work is split.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from .meanfield import lambda_rollout
from .mfe import assemble_equilibrium
from .model import ValidatedModel, focal_kernel, joint_index, kernel_eval, kernel_tensor, others_law, reward_table

logger = logging.getLogger(__name__)

CHUNK_SIZE = 4096
ALIAS_SCALE = 2 ** 32


@dataclass
class SimConfig:
    """
    :param n_blocks: number M of independent N-blocks (population M * N)
    :param seed: root seed of the per-chunk random streams
    :param horizon: number of simulated stages
    """

    n_blocks: int
    seed: int
    horizon: int

    def validate(self) -> "SimConfig":
        if self.n_blocks < 1:
            raise ValueError(f"number of blocks must be at least 1, got {self.n_blocks}")
        if self.horizon < 1:
            raise ValueError(f"simulation horizon must be at least 1, got {self.horizon}")
        return self


class AliasSampler:
    """
    Alias table over ``len(probs)`` outcomes built from integer weights.

    The probabilities are scaled to integers summing to n * 2^32 (largest
    remainders get the leftover units), and Vose's construction runs in exact
    integer arithmetic.
    """

    def __init__(self, probs: np.ndarray):
        probs = np.asarray(probs, dtype=float)
        n = probs.size
        if n == 0 or np.any(probs < 0.0) or probs.sum() <= 0.0:
            raise ValueError("alias sampler needs a nonempty nonnegative weight vector")
        scaled = probs / probs.sum() * (n * ALIAS_SCALE)
        weights = [int(w) for w in np.floor(scaled)]
        leftover = max(n * ALIAS_SCALE - sum(weights), 0)
        remainders = scaled - np.floor(scaled)
        for i in np.lexsort((np.arange(n), -remainders))[:leftover]:
            weights[int(i)] += 1

        threshold = [ALIAS_SCALE] * n
        alias = list(range(n))
        small = [i for i in range(n) if weights[i] < ALIAS_SCALE]
        large = [i for i in range(n) if weights[i] >= ALIAS_SCALE]
        while small and large:
            s, g = small.pop(), large.pop()
            threshold[s] = weights[s]
            alias[s] = g
            weights[g] -= ALIAS_SCALE - weights[s]
            (small if weights[g] < ALIAS_SCALE else large).append(g)

        self.n = n
        self.threshold = np.array(threshold, dtype=np.uint64)
        self.alias = np.array(alias, dtype=np.int64)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        column = rng.integers(0, self.n, size=size)
        coin = rng.integers(0, ALIAS_SCALE, size=size, dtype=np.uint64)
        return np.where(coin < self.threshold[column], column, self.alias[column])


def _grouped_draw(rng: np.random.Generator, keys: np.ndarray, sampler_for: Callable[[int], AliasSampler]) -> np.ndarray:
    """Draw one outcome per entry of ``keys`` from the sampler of its key, keys in sorted order."""
    out = np.empty(keys.size, dtype=np.int64)
    for key in np.unique(keys):
        mask = keys == key
        out[mask] = sampler_for(int(key)).sample(rng, int(mask.sum()))
    return out


def _action_samplers(gamma: np.ndarray) -> List[AliasSampler]:
    return [AliasSampler(row) for row in gamma]


def sample_block_trajectory(model: ValidatedModel, gammas: Sequence[np.ndarray], zpath: Sequence[np.ndarray],
                            rng: np.random.Generator) -> List[Tuple[int, int]]:
    """
    One N-block trajectory along a deterministic mean-field path.

    :returns: list of (joint type index, joint action index) for t = 1..T
    """
    na = model.n_actions
    joint_x = int(AliasSampler(zpath[0]).sample(rng, 1)[0])
    steps = []
    for t, gamma in enumerate(gammas):
        samplers = _action_samplers(gamma)
        types = model.joint_states[joint_x]
        actions = [int(samplers[x].sample(rng, 1)[0]) for x in types]
        joint_a = joint_index(actions, na)
        steps.append((joint_x, joint_a))
        law = kernel_eval(model, zpath[t], joint_x, joint_a)
        joint_x = int(AliasSampler(np.clip(law, 0.0, None)).sample(rng, 1)[0])
    return steps


def _simulate_chunk(model, gammas, zpath, kernels, size, rng):
    """Joint-type counts (T+1, Nx^N) of ``size`` blocks."""
    n_joint, n_corr = model.n_joint_states, model.n_corr
    counts = np.zeros((len(gammas) + 1, n_joint))
    joint_x = AliasSampler(zpath[0]).sample(rng, size)
    counts[0] = np.bincount(joint_x, minlength=n_joint)
    for t, gamma in enumerate(gammas):
        samplers = _action_samplers(gamma)
        joint_a = np.zeros(size, dtype=np.int64)
        for slot in range(n_corr):
            slot_types = model.joint_states[joint_x, slot]
            joint_a = joint_a * model.n_actions + _grouped_draw(rng, slot_types, lambda x: samplers[x])
        pair = joint_x * model.n_joint_actions + joint_a
        cache: Dict[int, AliasSampler] = {}

        def next_type_sampler(key, kernel=kernels[t]):
            if key not in cache:
                jx, ja = divmod(key, model.n_joint_actions)
                cache[key] = AliasSampler(np.clip(kernel[:, jx, ja], 0.0, None))
            return cache[key]

        joint_x = _grouped_draw(rng, pair, next_type_sampler)
        counts[t + 1] = np.bincount(joint_x, minlength=n_joint)
    return counts


def empirical_meanfield(model: ValidatedModel, gammas: Sequence[np.ndarray], z1: np.ndarray, n_blocks: int,
                        horizon: int, seed: int, progress: bool = False):
    """
    Empirical joint-type distributions of ``n_blocks`` simulated blocks.

    :returns: (empirical path of shape (T+1, Nx^N), deterministic path of the
        same shape, total-variation distance per t)
    """
    SimConfig(n_blocks, seed, horizon).validate()
    gammas = [np.asarray(g, dtype=float) for g in gammas[:horizon]]
    zpath = np.array(lambda_rollout(model, z1, gammas, horizon).meanfields)
    kernels = [kernel_tensor(model, z) for z in zpath[:-1]]

    counts = np.zeros_like(zpath)
    n_chunks = -(-n_blocks // CHUNK_SIZE)
    for chunk in tqdm(range(n_chunks), desc="simulating blocks", disable=not progress):
        size = min(CHUNK_SIZE, n_blocks - chunk * CHUNK_SIZE)
        counts += _simulate_chunk(model, gammas, zpath, kernels, size, np.random.default_rng([seed, chunk]))

    empirical = counts / n_blocks
    tv = 0.5 * np.abs(empirical - zpath).sum(axis=1)
    logger.info(f"simulated {n_blocks} blocks over {horizon} stages: max TV {tv.max():.3e}")
    return empirical, zpath, tv


def _focal_chunk(model, gammas, zpath, t0, x0, size, rng, terminal):
    """Discounted reward-to-go of ``size`` focal agents started at (t0, x0)."""
    delta, nx, na = model.discount, model.n_states, model.n_actions
    n_others = model.n_corr - 1
    x = np.full(size, x0, dtype=np.int64)
    total = np.zeros(size)
    weight = 1.0
    for t in range(t0, len(gammas) + 1):
        z, gamma = zpath[t - 1], gammas[t - 1]
        samplers = _action_samplers(gamma)
        a = _grouped_draw(rng, x, lambda s: samplers[s])
        total += weight * reward_table(model, z)[x, a]

        partner_law = others_law(model, z)
        partner_samplers = {}

        def partner_sampler(s):
            if s not in partner_samplers:
                partner_samplers[s] = AliasSampler(partner_law[s])
            return partner_samplers[s]

        x_others = _grouped_draw(rng, x, partner_sampler)
        a_others = np.zeros(size, dtype=np.int64)
        for slot in range(n_others):
            slot_types = model.others_states[x_others, slot]
            a_others = a_others * na + _grouped_draw(rng, slot_types, lambda s: samplers[s])

        focal = focal_kernel(model, z)
        key = ((x_others * nx + x) * model.n_others_actions + a_others) * na + a
        cache: Dict[int, AliasSampler] = {}

        def next_sampler(k, focal=focal):
            if k not in cache:
                rest, act = divmod(k, na)
                rest, act_o = divmod(rest, model.n_others_actions)
                xo, xf = divmod(rest, nx)
                cache[k] = AliasSampler(np.clip(focal[:, xo, xf, act_o, act], 0.0, None))
            return cache[k]

        x = _grouped_draw(rng, key, next_sampler)
        weight *= delta
    if terminal is not None:
        total += weight * terminal[x]
    return total


def monte_carlo_value(model: ValidatedModel, solution, z1: np.ndarray, t0: int, x0: int, n_samples: int,
                      seed: int, horizon: Optional[int] = None, mode: str = "interpolate",
                      progress: bool = False) -> Tuple[float, float]:
    """
    Sample mean and standard error of the focal agent's discounted
    reward-to-go from (t0, x0) under the equilibrium assembled from ``z1``.

    Partners are drawn each stage from the others-law of z_t and act by gamma_t,
    exactly the measure the stage q-values average over. A stationary
    solution is simulated for ``horizon`` stages without a tail.
    """
    if n_samples < 1:
        raise ValueError(f"number of samples must be at least 1, got {n_samples}")
    gammas, trajectory = assemble_equilibrium(model, z1, solution, horizon, mode=mode)
    zpath = trajectory.meanfields
    if not 1 <= t0 <= len(gammas):
        raise ValueError(f"t0={t0} outside stages 1..{len(gammas)}")
    terminal = None
    if not solution.stationary and len(gammas) == solution.horizon:
        continuation = solution.continuation(len(gammas))
        if continuation is not None:
            terminal = np.asarray(continuation(zpath[-1]), dtype=float)

    samples = np.empty(n_samples)
    n_chunks = -(-n_samples // CHUNK_SIZE)
    for chunk in tqdm(range(n_chunks), desc="sampling reward-to-go", disable=not progress):
        start = chunk * CHUNK_SIZE
        size = min(CHUNK_SIZE, n_samples - start)
        samples[start:start + size] = _focal_chunk(
            model, gammas, zpath, t0, x0, size, np.random.default_rng([seed, chunk]), terminal
        )
    mean = float(samples.mean())
    std_error = float(samples.std(ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else 0.0
    logger.info(f"monte carlo value at (t={t0}, x={x0}): {mean:.6f} +/- {std_error:.2e} ({n_samples} samples)")
    return mean, std_error
