"""
Model description of a correlated-type mean-field team or game.

A model holds the correlation order N, the type and action sets, the symmetric
joint kernel Q_x (an affine mixture of constant tensors, mixed by weights that
are affine in the mean field z), the reward R(x, a, z) and the discount.

Joint types (x^1, ..., x^N) are addressed by their row-major index
sum_i x^i * Nx^(N-i); the same convention is used for joint actions. The focal
agent always sits in slot N, i.e. it is the fastest-varying coordinate.
"""

import hashlib
import itertools
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    AsymmetricKernelError,
    BadDiscountError,
    BadSimplexError,
    IndexOutOfRangeError,
    ModelValidationError,
    NonStochasticKernelError,
)

logger = logging.getLogger(__name__)

INFINITE = "inf"

# Entries in [-NEGATIVE_CLAMP, 0) are rounding noise and get clamped to zero.
NEGATIVE_CLAMP = 1e-15
SIMPLEX_TOL = 1e-12
STOCHASTIC_TOL = 1e-12
SYMMETRY_TOL = 1e-12

BUNDLED_MODELS_DIR = Path(__file__).resolve().parent / "models"


@dataclass
class KernelSpec:
    """
    Joint kernel as an affine mixture of K constant tensors.

    ``base_tensors[k][jx'][jx][ja]``; weight k at z is
    ``weight_const[k] + weight_coeffs[k] @ z``.
    """

    base_tensors: np.ndarray
    weight_const: np.ndarray
    weight_coeffs: np.ndarray


@dataclass
class RewardSpec:
    """
    Reward R(x, a, z) = base[x][a] + sum_m coeffs[m][x][a] * (selectors[m] @ z).

    Selectors are linear functionals over joint types; a single-coordinate
    marginal is the indicator of the slot-1 state.
    """

    base: np.ndarray
    coeffs: np.ndarray
    selectors: np.ndarray


@dataclass
class ModelSpec:
    n_corr: int
    n_states: int
    n_actions: int
    discount: float
    horizon: Union[int, str]
    kernel: KernelSpec
    reward: RewardSpec
    initial_meanfield: np.ndarray
    name: str = "model"


@dataclass(frozen=True, eq=False)
class ValidatedModel:
    """
    Immutable, validated model handle.

    Besides the model data it caches the joint index tables, the slot
    permutations and the index strides used throughout the solvers.
    """

    name: str
    n_corr: int
    n_states: int
    n_actions: int
    discount: float
    horizon: Optional[int]
    base_tensors: np.ndarray
    weight_const: np.ndarray
    weight_coeffs: np.ndarray
    reward_base: np.ndarray
    reward_coeffs: np.ndarray
    reward_selectors: np.ndarray
    initial_meanfield: np.ndarray
    others_law: str
    strides: np.ndarray
    joint_states: np.ndarray
    joint_actions: np.ndarray
    others_states: np.ndarray
    others_actions: np.ndarray
    permutations: Tuple[Tuple[int, ...], ...]
    state_permutations: np.ndarray
    action_permutations: np.ndarray
    digest: str = field(default="")

    @property
    def n_joint_states(self) -> int:
        return self.n_states ** self.n_corr

    @property
    def n_joint_actions(self) -> int:
        return self.n_actions ** self.n_corr

    @property
    def n_others_states(self) -> int:
        return self.n_states ** (self.n_corr - 1)

    @property
    def n_others_actions(self) -> int:
        return self.n_actions ** (self.n_corr - 1)

    @property
    def is_infinite(self) -> bool:
        return self.horizon is None


def _joint_table(size: int, n_slots: int) -> np.ndarray:
    # Row-major enumeration of all n_slots-tuples over range(size).
    if n_slots == 0:
        return np.zeros((1, 0), dtype=int)
    return np.array(list(itertools.product(range(size), repeat=n_slots)), dtype=int)


def _strides(size: int, n_slots: int) -> np.ndarray:
    return size ** np.arange(n_slots - 1, -1, -1)


def joint_index(joint: Sequence[int], size: int) -> int:
    """Row-major index of a joint tuple over ``range(size)``."""
    joint = np.asarray(joint, dtype=int)
    return int(joint @ _strides(size, joint.size)) if joint.size else 0


def as_meanfield(values, dim: Optional[int] = None) -> np.ndarray:
    """
    Return ``values`` as a validated mean-field vector.

    :param values: probabilities over joint types, row-major
    :param dim: expected length (Nx^N), if known
    :returns: float array; entries in [-1e-15, 0) are clamped to 0
    :raises BadSimplexError: if the vector is not a distribution
    """
    z = np.array(values, dtype=float).ravel()
    if dim is not None and z.size != dim:
        raise BadSimplexError(f"mean field has length {z.size}, expected {dim}")
    if not np.all(np.isfinite(z)):
        raise BadSimplexError("mean field contains non-finite entries")
    if np.any(z < -NEGATIVE_CLAMP):
        raise BadSimplexError(f"mean field has negative entry {z.min():.3e}")
    z[z < 0.0] = 0.0
    if abs(z.sum() - 1.0) > SIMPLEX_TOL:
        raise BadSimplexError(f"mean field sums to {z.sum()!r}, not 1")
    return z


def as_prescription(rows, n_states: Optional[int] = None, n_actions: Optional[int] = None) -> np.ndarray:
    """
    Return ``rows`` as a validated prescription gamma[x][a].

    :raises BadSimplexError: if a row is not a distribution over actions
    """
    gamma = np.array(rows, dtype=float)
    if gamma.ndim != 2:
        raise BadSimplexError(f"prescription must be a 2-D table, got shape {gamma.shape}")
    if n_states is not None and gamma.shape[0] != n_states:
        raise BadSimplexError(f"prescription has {gamma.shape[0]} rows, expected {n_states}")
    if n_actions is not None and gamma.shape[1] != n_actions:
        raise BadSimplexError(f"prescription has {gamma.shape[1]} columns, expected {n_actions}")
    if np.any(gamma < -NEGATIVE_CLAMP) or not np.all(np.isfinite(gamma)):
        raise BadSimplexError("prescription has negative or non-finite entries")
    gamma[gamma < 0.0] = 0.0
    row_sums = gamma.sum(axis=1)
    bad = np.flatnonzero(np.abs(row_sums - 1.0) > SIMPLEX_TOL)
    if bad.size:
        raise BadSimplexError(f"prescription row {bad[0]} sums to {row_sums[bad[0]]!r}, not 1")
    return gamma


def _parse_selector(selector: dict, n_states: int, n_corr: int) -> np.ndarray:
    dim = n_states ** n_corr
    kind = selector.get("type")
    if kind == "marginal":
        state = int(selector["state"])
        if not 0 <= state < n_states:
            raise ModelValidationError(f"marginal selector state {state} out of range")
        return (_joint_table(n_states, n_corr)[:, 0] == state).astype(float)
    if kind == "linear":
        coeffs = np.asarray(selector["coeffs"], dtype=float)
        if coeffs.shape != (dim,):
            raise ModelValidationError(f"linear selector must have {dim} coefficients, got shape {coeffs.shape}")
        return coeffs
    raise ModelValidationError(f"unknown moment selector type {kind!r}")


def parse_model(raw: dict, name: str = "model") -> ModelSpec:
    """
    Build a ModelSpec from the JSON model schema (already decoded).
    """
    try:
        n_corr = int(raw["n_corr"])
        n_states = int(raw["n_states"])
        n_actions = int(raw["n_actions"])
        discount = float(raw["discount"])
        horizon = raw["horizon"]
        kernel_raw = raw["kernel"]
        reward_raw = raw["reward"]
        initial = raw["initial_meanfield"]
    except KeyError as e:
        raise ModelValidationError(f"model is missing required key {e.args[0]!r}") from e

    if n_corr < 1 or n_states < 1 or n_actions < 1:
        raise ModelValidationError("n_corr, n_states and n_actions must all be at least 1")
    if isinstance(horizon, str):
        if horizon.lower() not in ("inf", "infinite"):
            raise ModelValidationError(f"horizon must be a positive integer or 'inf', got {horizon!r}")
        horizon = INFINITE
    else:
        horizon = int(horizon)

    n_joint_states = n_states ** n_corr
    n_joint_actions = n_actions ** n_corr

    tensors = np.asarray(kernel_raw["base_tensors"], dtype=float)
    if tensors.ndim != 3 or tensors.shape[1:] != (n_joint_states, n_joint_states * n_joint_actions):
        raise ModelValidationError(
            f"base_tensors must have shape [K][{n_joint_states}][{n_joint_states * n_joint_actions}], "
            f"got {list(tensors.shape)}"
        )
    tensors = tensors.reshape(tensors.shape[0], n_joint_states, n_joint_states, n_joint_actions)

    weights_raw = kernel_raw.get("weights")
    if weights_raw is None:
        weights_raw = [{"const": 1.0, "coeffs": [0.0] * n_joint_states}]
    if len(weights_raw) != tensors.shape[0]:
        raise ModelValidationError(f"{tensors.shape[0]} base tensors but {len(weights_raw)} weight functionals")
    weight_const = np.array([float(w.get("const", 0.0)) for w in weights_raw])
    weight_coeffs = np.array([w.get("coeffs", [0.0] * n_joint_states) for w in weights_raw], dtype=float)

    base = np.asarray(reward_raw["base"], dtype=float)
    terms = reward_raw.get("moment_terms", [])
    coeffs = np.array([t["coeffs"] for t in terms], dtype=float).reshape(len(terms), n_states, n_actions)
    selectors = np.array(
        [_parse_selector(t["selector"], n_states, n_corr) for t in terms], dtype=float
    ).reshape(len(terms), n_joint_states)

    return ModelSpec(
        n_corr=n_corr,
        n_states=n_states,
        n_actions=n_actions,
        discount=discount,
        horizon=horizon,
        kernel=KernelSpec(tensors, weight_const, weight_coeffs),
        reward=RewardSpec(base, coeffs, selectors),
        initial_meanfield=np.asarray(initial, dtype=float),
        name=raw.get("name", name),
    )


def _slot_permutation_tables(n_states, n_actions, n_corr):
    joint_states = _joint_table(n_states, n_corr)
    joint_actions = _joint_table(n_actions, n_corr)
    state_strides = _strides(n_states, n_corr)
    action_strides = _strides(n_actions, n_corr)
    permutations = tuple(itertools.permutations(range(n_corr)))
    state_perms = np.array([joint_states[:, list(p)] @ state_strides for p in permutations], dtype=int)
    action_perms = np.array([joint_actions[:, list(p)] @ action_strides for p in permutations], dtype=int)
    return permutations, state_perms, action_perms


def _check_kernel(spec: ModelSpec, permutations, state_perms, action_perms):
    tensors = spec.kernel.base_tensors
    n_joint_states = spec.n_states ** spec.n_corr

    if not np.all(np.isfinite(tensors)):
        raise NonStochasticKernelError("kernel has non-finite entries")
    if np.any(tensors < 0.0):
        k, p, x, a = np.unravel_index(np.argmin(tensors), tensors.shape)
        raise NonStochasticKernelError(
            f"kernel tensor {k} has negative entry {tensors[k, p, x, a]!r} at (x'={p}, x={x}, a={a})"
        )
    column_sums = tensors.sum(axis=1)
    deviation = np.abs(column_sums - 1.0)
    if deviation.max() > STOCHASTIC_TOL:
        k, x, a = np.unravel_index(np.argmax(deviation), deviation.shape)
        raise NonStochasticKernelError(
            f"kernel tensor {k} is not stochastic at (x={x}, a={a}): entries sum to {column_sums[k, x, a]!r}"
        )

    # Affine weights sum to one on the whole simplex iff they do at every
    # vertex; they are nonnegative on the simplex iff they are at every vertex.
    const = spec.kernel.weight_const
    coeffs = spec.kernel.weight_coeffs
    if coeffs.shape != (tensors.shape[0], n_joint_states):
        raise ModelValidationError(f"weight coefficients must have shape {(tensors.shape[0], n_joint_states)}")
    vertex_weights = const[:, None] + coeffs
    if np.abs(vertex_weights.sum(axis=0) - 1.0).max() > STOCHASTIC_TOL:
        raise NonStochasticKernelError("kernel weights do not sum to 1 over the simplex")
    if vertex_weights.min() < -NEGATIVE_CLAMP:
        k, j = np.unravel_index(np.argmin(vertex_weights), vertex_weights.shape)
        raise NonStochasticKernelError(f"kernel weight {k} is negative at simplex vertex {j}")

    for perm, sp, ap in zip(permutations, state_perms, action_perms):
        permuted = tensors[:, sp][:, :, sp][:, :, :, ap]
        gap = np.abs(permuted - tensors)
        if gap.max() > SYMMETRY_TOL:
            k, p, x, a = np.unravel_index(np.argmax(gap), gap.shape)
            raise AsymmetricKernelError(
                f"kernel tensor {k} is not symmetric under slot permutation {perm}: "
                f"Q(x'={p} | x={x}, a={a}) = {tensors[k, p, x, a]!r} but the permuted entry is "
                f"{permuted[k, p, x, a]!r}",
                permutation=perm,
                index=(int(p), int(x), int(a)),
            )


def validate_model(spec: ModelSpec, others_law: str = "marginal") -> ValidatedModel:
    """
    Validate a model description and return an immutable handle.

    :param spec: raw model description
    :param others_law: law of the other N-1 agents in the focal agent's
        expectation, ``marginal`` (as written) or ``conditional`` on the focal type
    :raises ModelValidationError: (or a subclass) on the first violated invariant
    """
    if others_law not in ("marginal", "conditional"):
        raise ModelValidationError(f"others law must be 'marginal' or 'conditional', got {others_law!r}")
    n_corr, n_states, n_actions = spec.n_corr, spec.n_states, spec.n_actions
    n_joint_states = n_states ** n_corr
    n_joint_actions = n_actions ** n_corr

    tensors = np.asarray(spec.kernel.base_tensors, dtype=float)
    if tensors.ndim != 4 or tensors.shape[1:] != (n_joint_states, n_joint_states, n_joint_actions):
        raise ModelValidationError(f"kernel tensors have shape {tensors.shape}")

    discount = float(spec.discount)
    if not (np.isfinite(discount) and 0.0 <= discount <= 1.0):
        raise BadDiscountError(f"discount must lie in [0, 1], got {discount}")
    if spec.horizon == INFINITE:
        horizon = None
        if discount >= 1.0:
            raise BadDiscountError("an infinite horizon needs a discount strictly below 1")
    else:
        horizon = int(spec.horizon)
        if horizon < 1:
            raise ModelValidationError(f"horizon must be at least 1, got {horizon}")

    reward_base = np.asarray(spec.reward.base, dtype=float)
    reward_coeffs = np.asarray(spec.reward.coeffs, dtype=float).reshape(-1, n_states, n_actions)
    reward_selectors = np.asarray(spec.reward.selectors, dtype=float).reshape(-1, n_joint_states)
    if reward_base.shape != (n_states, n_actions):
        raise ModelValidationError(f"reward base must have shape {(n_states, n_actions)}, got {reward_base.shape}")
    if reward_coeffs.shape[0] != reward_selectors.shape[0]:
        raise ModelValidationError("every reward moment term needs one coefficient table and one selector")
    for name, arr in (("base", reward_base), ("coefficients", reward_coeffs), ("selectors", reward_selectors)):
        if not np.all(np.isfinite(arr)):
            raise ModelValidationError(f"reward {name} contain non-finite entries")

    initial = as_meanfield(spec.initial_meanfield, n_joint_states)

    permutations, state_perms, action_perms = _slot_permutation_tables(n_states, n_actions, n_corr)
    kernel = KernelSpec(tensors, np.asarray(spec.kernel.weight_const, dtype=float),
                        np.asarray(spec.kernel.weight_coeffs, dtype=float))
    _check_kernel(
        ModelSpec(n_corr, n_states, n_actions, discount, spec.horizon, kernel, spec.reward, initial),
        permutations, state_perms, action_perms,
    )

    arrays = dict(
        base_tensors=tensors,
        weight_const=kernel.weight_const,
        weight_coeffs=kernel.weight_coeffs,
        reward_base=reward_base,
        reward_coeffs=reward_coeffs,
        reward_selectors=reward_selectors,
        initial_meanfield=initial,
        strides=_strides(n_states, n_corr),
        joint_states=_joint_table(n_states, n_corr),
        joint_actions=_joint_table(n_actions, n_corr),
        others_states=_joint_table(n_states, n_corr - 1),
        others_actions=_joint_table(n_actions, n_corr - 1),
        state_permutations=state_perms,
        action_permutations=action_perms,
    )
    for arr in arrays.values():
        arr.setflags(write=False)

    model = ValidatedModel(
        name=spec.name,
        n_corr=n_corr,
        n_states=n_states,
        n_actions=n_actions,
        discount=discount,
        horizon=horizon,
        others_law=others_law,
        permutations=permutations,
        **arrays,
    )
    object.__setattr__(model, "digest", model_digest(model))
    logger.debug(f"validated model {model.name}: N={n_corr}, Nx={n_states}, Na={n_actions}, "
                 f"K={tensors.shape[0]}, {len(permutations)} slot permutations checked")
    return model


def load_model(path: Union[str, Path], others_law: str = "marginal") -> ValidatedModel:
    """
    Read and validate a JSON model file.

    :raises FileNotFoundError: if ``path`` does not exist
    :raises ModelValidationError: if the file is malformed or invalid
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"model file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ModelValidationError(f"model file {path} is not valid JSON: {e}") from e
    return validate_model(parse_model(raw, name=path.stem), others_law=others_law)


def bundled_model_path(name: str) -> Path:
    """Path of one of the example models shipped with the package."""
    if not name.endswith(".json"):
        name = name + ".json"
    return BUNDLED_MODELS_DIR / name


def to_raw(model: ValidatedModel) -> dict:
    """JSON-schema dictionary describing ``model`` (selectors written as linear)."""
    n_joint = model.n_joint_states
    tensors = model.base_tensors.reshape(model.base_tensors.shape[0], n_joint, -1)
    return {
        "name": model.name,
        "n_corr": model.n_corr,
        "n_states": model.n_states,
        "n_actions": model.n_actions,
        "discount": model.discount,
        "horizon": INFINITE if model.horizon is None else model.horizon,
        "kernel": {
            "base_tensors": tensors.tolist(),
            "weights": [
                {"const": float(c), "coeffs": coeffs.tolist()}
                for c, coeffs in zip(model.weight_const, model.weight_coeffs)
            ],
        },
        "reward": {
            "base": model.reward_base.tolist(),
            "moment_terms": [
                {"coeffs": coeffs.tolist(), "selector": {"type": "linear", "coeffs": sel.tolist()}}
                for coeffs, sel in zip(model.reward_coeffs, model.reward_selectors)
            ],
        },
        "initial_meanfield": model.initial_meanfield.tolist(),
    }


def model_digest(model: ValidatedModel) -> str:
    raw = to_raw(model)
    raw.pop("name")
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _check_index(value, upper, what):
    if not 0 <= int(value) < upper:
        raise IndexOutOfRangeError(f"{what} index {value} out of range [0, {upper})")


def kernel_weights(model: ValidatedModel, z: np.ndarray) -> np.ndarray:
    return model.weight_const + model.weight_coeffs @ z


def kernel_tensor(model: ValidatedModel, z: np.ndarray) -> np.ndarray:
    """Mixed kernel Q(jx' | z, jx, ja) as an array indexed [jx', jx, ja]."""
    return np.einsum("k,kpxa->pxa", kernel_weights(model, z), model.base_tensors)


def kernel_eval(model: ValidatedModel, z: np.ndarray, joint_x: int, joint_a: int) -> np.ndarray:
    """
    Distribution of the next joint type given (z, joint_x, joint_a).

    :param joint_x: row-major joint type index
    :param joint_a: row-major joint action index
    :raises IndexOutOfRangeError: if an index is out of range
    """
    _check_index(joint_x, model.n_joint_states, "joint type")
    _check_index(joint_a, model.n_joint_actions, "joint action")
    return kernel_weights(model, z) @ model.base_tensors[:, :, joint_x, joint_a]


def focal_next_state_law(
    model: ValidatedModel,
    z: np.ndarray,
    x_others: Sequence[int],
    x_focal: int,
    a_others: Sequence[int],
    a_focal: int,
    slot: Optional[int] = None,
) -> np.ndarray:
    """
    Next-type law of one focal agent whose block partners are ``x_others``.

    The focal agent is placed in ``slot`` (default: the last slot, N-1 in
    0-based terms), the joint kernel is evaluated and the joint next-type law is
    marginalised onto that slot.
    """
    n_corr, n_states = model.n_corr, model.n_states
    x_others, a_others = tuple(int(x) for x in x_others), tuple(int(a) for a in a_others)
    if len(x_others) != n_corr - 1 or len(a_others) != n_corr - 1:
        raise IndexOutOfRangeError(f"expected {n_corr - 1} other agents, got {len(x_others)} types "
                                   f"and {len(a_others)} actions")
    for x in x_others + (x_focal,):
        _check_index(x, n_states, "type")
    for a in a_others + (a_focal,):
        _check_index(a, model.n_actions, "action")
    slot = n_corr - 1 if slot is None else int(slot)
    _check_index(slot, n_corr, "slot")

    joint_x = x_others[:slot] + (int(x_focal),) + x_others[slot:]
    joint_a = a_others[:slot] + (int(a_focal),) + a_others[slot:]
    law = kernel_eval(model, z, joint_index(joint_x, n_states), joint_index(joint_a, model.n_actions))
    other_axes = tuple(i for i in range(n_corr) if i != slot)
    return law.reshape((n_states,) * n_corr).sum(axis=other_axes)


def focal_kernel(model: ValidatedModel, z: np.ndarray) -> np.ndarray:
    """
    Focal-slot marginal of the mixed kernel, indexed [x', x_others, x, a_others, a].
    """
    so, nx = model.n_others_states, model.n_states
    ao, na = model.n_others_actions, model.n_actions
    return kernel_tensor(model, z).reshape(so, nx, so, nx, ao, na).sum(axis=0)


def marginal(model: ValidatedModel, z: np.ndarray) -> np.ndarray:
    """Single-coordinate (slot 1) marginal of the joint mean field."""
    z = np.asarray(z, dtype=float)
    return z.reshape(model.n_states, -1).sum(axis=1)


def others_law(model: ValidatedModel, z: np.ndarray) -> np.ndarray:
    """
    Law of the other N-1 block members, one row per focal type.

    With the ``marginal`` law every row is the (N-1)-coordinate marginal of z;
    with ``conditional`` row x is the law given that the focal slot holds x,
    falling back to the marginal where x has no mass.
    """
    blocks = np.asarray(z, dtype=float).reshape(model.n_others_states, model.n_states)
    joint_marginal = blocks.sum(axis=1)
    law = np.tile(joint_marginal, (model.n_states, 1))
    if model.others_law == "conditional":
        mass = blocks.sum(axis=0)
        for x in np.flatnonzero(mass > 0.0):
            law[x] = blocks[:, x] / mass[x]
    return law


def others_action_probs(model: ValidatedModel, gamma: np.ndarray) -> np.ndarray:
    """Product probability of other agents' joint actions, indexed [x_others, a_others]."""
    return gamma[model.others_states[:, None, :], model.others_actions[None, :, :]].prod(axis=-1)


def joint_action_probs(model: ValidatedModel, gamma: np.ndarray) -> np.ndarray:
    """Product probability prod_i gamma(a^i | x^i), indexed [joint_x, joint_a]."""
    return gamma[model.joint_states[:, None, :], model.joint_actions[None, :, :]].prod(axis=-1)


def moments(model: ValidatedModel, z: np.ndarray) -> np.ndarray:
    return model.reward_selectors @ z


def reward_table(model: ValidatedModel, z: np.ndarray) -> np.ndarray:
    """R(x, a, z) for every (x, a)."""
    return model.reward_base + np.tensordot(moments(model, z), model.reward_coeffs, axes=1)


def reward_eval(model: ValidatedModel, x: int, a: int, z: np.ndarray) -> float:
    _check_index(x, model.n_states, "type")
    _check_index(a, model.n_actions, "action")
    return float(reward_table(model, z)[x, a])


def reward_bound(model: ValidatedModel) -> float:
    """sup |R| over types, actions and the simplex, attained at a vertex."""
    vertices = np.eye(model.n_joint_states)
    return float(max(np.abs(reward_table(model, v)).max() for v in vertices))


def pure_prescriptions(model: ValidatedModel) -> List[np.ndarray]:
    """All Na^Nx deterministic prescriptions in lexicographic order."""
    eye = np.eye(model.n_actions)
    return [eye[list(choice)] for choice in itertools.product(range(model.n_actions), repeat=model.n_states)]
