"""
Programmatic model constructors.

Handy for tests, notebooks and for generating model files: identity and
uniform kernels, constant rewards, a next-type-equals-action kernel, seeded
random models and kernel symmetrisation.
"""

import itertools
from typing import Optional, Sequence, Union

import numpy as np

from .model import KernelSpec, ModelSpec, RewardSpec, ValidatedModel, _joint_table, _strides, validate_model


def _uniform_meanfield(dim: int) -> np.ndarray:
    return np.full(dim, 1.0 / dim)


def _build(n_corr, n_states, n_actions, tensors, reward_base, discount, horizon, initial, name,
           weight_const=None, weight_coeffs=None, moment_coeffs=None, selectors=None,
           others_law="marginal") -> ValidatedModel:
    dim = n_states ** n_corr
    tensors = np.asarray(tensors, dtype=float)
    if tensors.ndim == 3:
        tensors = tensors[None]
    n_weights = tensors.shape[0]
    if weight_const is None:
        weight_const = np.ones(1) if n_weights == 1 else np.zeros(n_weights)
    if weight_coeffs is None:
        weight_coeffs = np.zeros((n_weights, dim))
    if moment_coeffs is None:
        moment_coeffs = np.zeros((0, n_states, n_actions))
        selectors = np.zeros((0, dim))
    spec = ModelSpec(
        n_corr=n_corr,
        n_states=n_states,
        n_actions=n_actions,
        discount=discount,
        horizon=horizon,
        kernel=KernelSpec(tensors, np.asarray(weight_const, dtype=float), np.asarray(weight_coeffs, dtype=float)),
        reward=RewardSpec(np.asarray(reward_base, dtype=float), np.asarray(moment_coeffs, dtype=float),
                          np.asarray(selectors, dtype=float)),
        initial_meanfield=_uniform_meanfield(dim) if initial is None else np.asarray(initial, dtype=float),
        name=name,
    )
    return validate_model(spec, others_law=others_law)


def marginal_selector(n_corr: int, n_states: int, state: int) -> np.ndarray:
    """Linear functional z -> probability that slot 1 holds ``state``."""
    return (_joint_table(n_states, n_corr)[:, 0] == state).astype(float)


def identity_tensor(n_corr: int, n_states: int, n_actions: int) -> np.ndarray:
    dim = n_states ** n_corr
    return np.repeat(np.eye(dim)[:, :, None], n_actions ** n_corr, axis=2)


def uniform_tensor(n_corr: int, n_states: int, n_actions: int) -> np.ndarray:
    dim = n_states ** n_corr
    return np.full((dim, dim, n_actions ** n_corr), 1.0 / dim)


def action_tensor(n_states: int, n_actions: int) -> np.ndarray:
    """Single-agent kernel whose next type is the chosen action (needs Na == Nx)."""
    if n_states != n_actions:
        raise ValueError("next-type-equals-action kernel needs as many actions as types")
    tensor = np.zeros((n_states, n_states, n_actions))
    for x, a in itertools.product(range(n_states), range(n_actions)):
        tensor[a, x, a] = 1.0
    return tensor


def symmetrize_kernel(tensor: np.ndarray, n_corr: int, n_states: int, n_actions: int) -> np.ndarray:
    """
    Average a joint tensor [jx'][jx][ja] over all slot permutations.

    Column-stochastic inputs stay column-stochastic.
    """
    joint_states = _joint_table(n_states, n_corr)
    joint_actions = _joint_table(n_actions, n_corr)
    state_strides, action_strides = _strides(n_states, n_corr), _strides(n_actions, n_corr)
    total = np.zeros_like(tensor, dtype=float)
    permutations = list(itertools.permutations(range(n_corr)))
    for perm in permutations:
        sp = joint_states[:, list(perm)] @ state_strides
        ap = joint_actions[:, list(perm)] @ action_strides
        total += tensor[sp][:, sp][:, :, ap]
    return total / len(permutations)


def identity_model(n_corr: int = 1, n_states: int = 2, n_actions: int = 2,
                   reward_base: Optional[np.ndarray] = None, discount: float = 0.9,
                   horizon: Union[int, str] = 3, initial: Optional[Sequence[float]] = None,
                   others_law: str = "marginal") -> ValidatedModel:
    """Types never change; reward defaults to R(x, a) = x - a / 2."""
    if reward_base is None:
        reward_base = np.arange(n_states)[:, None] - 0.5 * np.arange(n_actions)[None, :]
    return _build(n_corr, n_states, n_actions, identity_tensor(n_corr, n_states, n_actions), reward_base,
                  discount, horizon, initial, "identity", others_law=others_law)


def uniform_model(n_corr: int = 2, n_states: int = 2, n_actions: int = 2,
                  reward_base: Optional[np.ndarray] = None, discount: float = 0.8,
                  horizon: Union[int, str] = 2, initial: Optional[Sequence[float]] = None) -> ValidatedModel:
    """Next joint type uniform whatever the current state and actions."""
    if reward_base is None:
        reward_base = np.eye(n_states, n_actions)
    return _build(n_corr, n_states, n_actions, uniform_tensor(n_corr, n_states, n_actions), reward_base,
                  discount, horizon, initial, "uniform")


def constant_reward_model(value: float, n_corr: int = 2, n_states: int = 2, n_actions: int = 2,
                          discount: float = 0.9, horizon: Union[int, str] = 3, seed: int = 0) -> ValidatedModel:
    """R = ``value`` everywhere, on a seeded random symmetric kernel."""
    rng = np.random.default_rng(seed)
    tensor = symmetrize_kernel(_random_stochastic(rng, n_corr, n_states, n_actions), n_corr, n_states, n_actions)
    return _build(n_corr, n_states, n_actions, tensor, np.full((n_states, n_actions), float(value)),
                  discount, horizon, None, "constant-reward")


def action_model(n_states: int = 2, reward_on_meanfield: bool = True, discount: float = 0.9,
                 horizon: Union[int, str] = 2, initial: Optional[Sequence[float]] = None) -> ValidatedModel:
    """
    Single-agent model where the chosen action is the next type; with
    ``reward_on_meanfield`` the reward is R(x, a, z) = z(x).
    """
    moment_coeffs = selectors = None
    if reward_on_meanfield:
        moment_coeffs = np.zeros((n_states, n_states, n_states))
        for s in range(n_states):
            moment_coeffs[s, s, :] = 1.0
        selectors = np.eye(n_states)
    return _build(1, n_states, n_states, action_tensor(n_states, n_states), np.zeros((n_states, n_states)),
                  discount, horizon, initial, "action", moment_coeffs=moment_coeffs, selectors=selectors)


def _random_stochastic(rng, n_corr, n_states, n_actions):
    dim = n_states ** n_corr
    raw = rng.uniform(0.05, 1.0, size=(dim, dim, n_actions ** n_corr))
    return raw / raw.sum(axis=0, keepdims=True)


def random_model(seed: int, n_corr: int = 1, n_states: int = 2, n_actions: int = 2, n_weights: int = 1,
                 discount: float = 0.5, horizon: Union[int, str] = 3, moment_scale: float = 0.1,
                 others_law: str = "marginal") -> ValidatedModel:
    """
    Seeded random model with a symmetric kernel.

    With ``n_weights > 1`` the base tensors are mixed by weights
    w_k(z) = sum_j c_kj z(j), where every column c_.j is a random distribution,
    so the weights are nonnegative and sum to one on the whole simplex. The
    reward has one moment term on the slot-1 marginal of state 0, scaled by
    ``moment_scale``.
    """
    rng = np.random.default_rng(seed)
    dim = n_states ** n_corr
    tensors = np.array([
        symmetrize_kernel(_random_stochastic(rng, n_corr, n_states, n_actions), n_corr, n_states, n_actions)
        for _ in range(n_weights)
    ])
    if n_weights == 1:
        weight_const, weight_coeffs = np.ones(1), np.zeros((1, dim))
    else:
        weight_const = np.zeros(n_weights)
        weight_coeffs = rng.dirichlet(np.ones(n_weights), size=dim).T
    reward_base = rng.uniform(-1.0, 1.0, size=(n_states, n_actions))
    moment_coeffs = moment_scale * rng.uniform(-1.0, 1.0, size=(1, n_states, n_actions))
    selectors = marginal_selector(n_corr, n_states, 0)[None]
    initial = rng.dirichlet(np.ones(dim))
    return _build(n_corr, n_states, n_actions, tensors, reward_base, discount, horizon, initial,
                  f"random-{seed}", weight_const, weight_coeffs, moment_coeffs, selectors, others_law)
