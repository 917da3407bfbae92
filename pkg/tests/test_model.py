from corrmfg.builders import identity_model, random_model, uniform_model
from corrmfg.errors import (
    AsymmetricKernelError,
    BadDiscountError,
    BadSimplexError,
    IndexOutOfRangeError,
    ModelValidationError,
    NonStochasticKernelError,
)
from corrmfg.model import (
    as_meanfield,
    bundled_model_path,
    focal_next_state_law,
    joint_index,
    kernel_eval,
    load_model,
    marginal,
    others_law,
    parse_model,
    reward_eval,
    reward_table,
    to_raw,
    validate_model,
)

import copy
import itertools
import json

import numpy as np
import pytest


def _contagion():
    return load_model(bundled_model_path("contagion2"))


def _pair_raw():
    # Two-agent, one-action identity model as a raw dictionary to tamper with
    return to_raw(identity_model(n_corr=2, n_states=2, n_actions=1))


def test_bundled_models_validate():
    # Every bundled model passes the exhaustive stochasticity and permutation
    # checks, and the headline model has the documented shape.
    for name in ("contagion2", "contagion3", "identity1", "uniform2"):
        model = load_model(bundled_model_path(name))
        assert model.digest

    model = _contagion()
    assert (model.n_corr, model.n_states, model.n_actions) == (2, 2, 2)
    assert model.n_joint_states == 4
    assert model.discount == 0.9
    assert model.horizon == 3
    assert load_model(bundled_model_path("identity1")).is_infinite


def test_identity_kernel_is_point_mass():
    # An identity kernel keeps the joint type, whatever z and the actions are.
    model = identity_model(n_corr=2)
    rng = np.random.default_rng(0)
    for _ in range(10):
        z = rng.dirichlet(np.ones(4))
        jx, ja = rng.integers(4), rng.integers(4)
        np.testing.assert_array_equal(kernel_eval(model, z, jx, ja), np.eye(4)[jx])


def test_uniform_kernel_is_uniform():
    model = uniform_model()
    z = np.array([0.7, 0.1, 0.1, 0.1])
    for jx, ja in itertools.product(range(4), range(4)):
        np.testing.assert_allclose(kernel_eval(model, z, jx, ja), np.full(4, 0.25), atol=1e-15)


def test_contagion_kernel_matches_direct_mixture():
    # At the uniform mean field both base tensors get weight 1/2. Column
    # (jx=(0,1), ja=(1,0)) is entry 6 of each row in the file.
    model = _contagion()
    raw = json.loads(bundled_model_path("contagion2").read_text())
    z = np.full(4, 0.25)

    weights = [w["const"] + np.dot(w["coeffs"], z) for w in raw["kernel"]["weights"]]
    np.testing.assert_allclose(weights, [0.5, 0.5], atol=1e-15)
    expected = np.zeros(4)
    for k, tensor in enumerate(raw["kernel"]["base_tensors"]):
        for p in range(4):
            expected[p] += weights[k] * tensor[p][1 * 4 + 2]

    law = kernel_eval(model, z, joint_index((0, 1), 2), joint_index((1, 0), 2))
    np.testing.assert_allclose(law, expected, atol=1e-12)
    np.testing.assert_allclose(law, [0.17, 0.68, 0.03, 0.12], atol=1e-12)


def test_kernel_index_out_of_range():
    model = _contagion()
    z = np.full(4, 0.25)
    with pytest.raises(IndexOutOfRangeError):
        kernel_eval(model, z, 4, 0)
    with pytest.raises(IndexOutOfRangeError):
        kernel_eval(model, z, 0, -1)
    with pytest.raises(IndexOutOfRangeError):
        focal_next_state_law(model, z, [2], 0, [0], 0)


def test_kernel_rows_are_distributions():
    # kernel_eval sums to one for random valid inputs on every bundled model.
    rng = np.random.default_rng(1)
    for name in ("contagion2", "contagion3", "identity1", "uniform2"):
        model = load_model(bundled_model_path(name))
        for _ in range(1000):
            z = rng.dirichlet(np.ones(model.n_joint_states))
            law = kernel_eval(model, z, rng.integers(model.n_joint_states), rng.integers(model.n_joint_actions))
            assert abs(law.sum() - 1.0) <= 1e-12
            assert law.min() >= 0.0


def _permuted_index(index, perm, base, n_corr):
    digits = np.unravel_index(index, (base,) * n_corr)
    return joint_index([digits[i] for i in perm], base)


def test_kernel_permutation_invariance():
    # Permuting the slots of (jx, ja) permutes the slots of the next joint
    # type, for every slot permutation of the two- and three-agent models.
    rng = np.random.default_rng(2)
    for name in ("contagion2", "contagion3"):
        model = load_model(bundled_model_path(name))
        n, ns, na = model.n_corr, model.n_states, model.n_actions
        perms = list(itertools.permutations(range(n)))
        assert len(perms) == len(model.permutations)
        for _ in range(200):
            z = rng.dirichlet(np.ones(model.n_joint_states))
            jx, ja = rng.integers(model.n_joint_states), rng.integers(model.n_joint_actions)
            law = kernel_eval(model, z, jx, ja)
            for perm in perms:
                moved = kernel_eval(model, z, _permuted_index(jx, perm, ns, n), _permuted_index(ja, perm, na, n))
                target = [_permuted_index(p, perm, ns, n) for p in range(model.n_joint_states)]
                np.testing.assert_allclose(moved[target], law, atol=1e-12)


def test_focal_next_state_law():
    # Focal agent in slot 2 with partner (x=1, a=0), focal (x=0, a=1): the
    # joint column is (jx=(1,0), ja=(0,1)) and the law is its slot-2 marginal.
    model = _contagion()
    z = np.full(4, 0.25)
    joint = kernel_eval(model, z, joint_index((1, 0), 2), joint_index((0, 1), 2))
    law = focal_next_state_law(model, z, [1], 0, [0], 1)
    np.testing.assert_allclose(law, joint.reshape(2, 2).sum(axis=0), atol=1e-15)
    np.testing.assert_allclose(law, [0.85, 0.15], atol=1e-12)

    # Same focal agent placed in slot 1 gives the same law
    np.testing.assert_allclose(focal_next_state_law(model, z, [1], 0, [0], 1, slot=0), law, atol=1e-12)


def test_focal_law_slot_independent():
    # The focal agent's next-type law does not depend on the slot it sits in
    rng = np.random.default_rng(4)
    for name in ("contagion2", "contagion3"):
        model = load_model(bundled_model_path(name))
        others = model.n_corr - 1
        for _ in range(200):
            z = rng.dirichlet(np.ones(model.n_joint_states))
            x_others = list(rng.integers(model.n_states, size=others))
            a_others = list(rng.integers(model.n_actions, size=others))
            x_focal, a_focal = int(rng.integers(model.n_states)), int(rng.integers(model.n_actions))
            reference = focal_next_state_law(model, z, x_others, x_focal, a_others, a_focal)
            assert abs(reference.sum() - 1.0) <= 1e-12
            for slot in range(model.n_corr):
                np.testing.assert_allclose(
                    focal_next_state_law(model, z, x_others, x_focal, a_others, a_focal, slot=slot),
                    reference, atol=1e-12,
                )

    # Same check on a random three-agent model with z-dependent weights
    model = random_model(4, n_corr=3, n_weights=2)
    z = rng.dirichlet(np.ones(8))
    reference = focal_next_state_law(model, z, [1, 0], 1, [0, 1], 0)
    for slot in range(3):
        np.testing.assert_allclose(focal_next_state_law(model, z, [1, 0], 1, [0, 1], 0, slot=slot),
                                   reference, atol=1e-12)


def test_single_agent_focal_law_is_kernel():
    model = load_model(bundled_model_path("identity1"))
    z = np.array([0.3, 0.7])
    for x, a in itertools.product(range(2), range(2)):
        np.testing.assert_array_equal(focal_next_state_law(model, z, [], x, [], a), kernel_eval(model, z, x, a))


def test_marginal():
    model = _contagion()
    np.testing.assert_allclose(marginal(model, [0.5, 0.3, 0.1, 0.1]), [0.8, 0.2], atol=1e-15)
    np.testing.assert_allclose(marginal(model, np.full(4, 0.25)), [0.5, 0.5], atol=1e-15)
    single = load_model(bundled_model_path("identity1"))
    np.testing.assert_array_equal(marginal(single, [0.3, 0.7]), [0.3, 0.7])


def test_reward_eval():
    # Infection pressure is the slot-1 share of infected agents, m = z[2] + z[3]
    model = _contagion()
    z = np.array([0.1, 0.2, 0.3, 0.4])
    np.testing.assert_allclose(reward_table(model, z), [[1.0 - 0.5 * 0.7, 0.7 - 0.1 * 0.7], [0.0, -0.2]],
                               atol=1e-15)
    assert reward_eval(model, 0, 1, z) == pytest.approx(0.63, abs=1e-15)

    # No moment terms: the base table for any z
    plain = identity_model(reward_base=np.array([[1.0, 2.0], [3.0, 4.0]]))
    np.testing.assert_array_equal(reward_table(plain, np.array([0.9, 0.1])), [[1.0, 2.0], [3.0, 4.0]])


def test_reward_is_affine_in_meanfield():
    model = _contagion()
    rng = np.random.default_rng(5)
    for _ in range(50):
        z1, z2 = rng.dirichlet(np.ones(4), size=2)
        alpha = rng.uniform()
        np.testing.assert_allclose(
            reward_table(model, alpha * z1 + (1 - alpha) * z2),
            alpha * reward_table(model, z1) + (1 - alpha) * reward_table(model, z2),
            atol=1e-12,
        )


def test_asymmetric_kernel_detected():
    # Joint type (0,1) moves to (0,0) but its mirror (1,0) stays put
    raw = _pair_raw()
    raw["kernel"]["base_tensors"][0][1][1] = 0.0
    raw["kernel"]["base_tensors"][0][0][1] = 1.0
    with pytest.raises(AsymmetricKernelError) as excinfo:
        validate_model(parse_model(raw))
    assert excinfo.value.permutation == (1, 0)
    assert "permutation" in str(excinfo.value)


def test_non_stochastic_kernel_detected():
    raw = _pair_raw()
    raw["kernel"]["base_tensors"][0][0][0] = 0.9
    with pytest.raises(NonStochasticKernelError):
        validate_model(parse_model(raw))

    raw = _pair_raw()
    raw["kernel"]["weights"] = [{"const": 0.5, "coeffs": [0.0, 0.0, 0.0, 0.0]}]
    with pytest.raises(NonStochasticKernelError):
        validate_model(parse_model(raw))


def test_bad_meanfield_and_discount():
    raw = _pair_raw()
    raw["initial_meanfield"] = [0.5, 0.6, 0.0, 0.0]
    with pytest.raises(BadSimplexError):
        validate_model(parse_model(raw))

    raw = _pair_raw()
    raw["discount"] = 1.2
    with pytest.raises(BadDiscountError):
        validate_model(parse_model(raw))

    raw = _pair_raw()
    raw["discount"] = 1.0
    raw["horizon"] = "inf"
    with pytest.raises(BadDiscountError):
        validate_model(parse_model(raw))

    # Rounding noise below the clamp threshold is accepted and zeroed
    z = as_meanfield([0.5, 0.5, -1e-16, 0.0])
    assert z[2] == 0.0
    with pytest.raises(BadSimplexError):
        as_meanfield([0.5, 0.5, -1e-10, 1e-10])


def test_malformed_model_files(tmp_path):
    raw = _pair_raw()
    del raw["reward"]
    with pytest.raises(ModelValidationError, match="reward"):
        parse_model(raw)

    with pytest.raises(FileNotFoundError, match="missing.json"):
        load_model(tmp_path / "missing.json")

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ModelValidationError):
        load_model(broken)


def test_others_law_marginal_and_conditional():
    # Focal type sits in the last slot: z reshaped as [others, focal]
    z = np.array([0.6, 0.0, 0.2, 0.2])
    model = load_model(bundled_model_path("contagion2"))
    np.testing.assert_allclose(others_law(model, z), [[0.6, 0.4], [0.6, 0.4]], atol=1e-15)

    conditional = load_model(bundled_model_path("contagion2"), others_law="conditional")
    np.testing.assert_allclose(others_law(conditional, z), [[0.75, 0.25], [0.0, 1.0]], atol=1e-15)

    # A focal type without mass falls back to the marginal
    z = np.array([0.6, 0.0, 0.4, 0.0])
    np.testing.assert_allclose(others_law(conditional, z), [[0.6, 0.4], [0.6, 0.4]], atol=1e-15)

    with pytest.raises(ModelValidationError):
        load_model(bundled_model_path("contagion2"), others_law="joint")


def test_raw_model_reloads_to_same_digest():
    model = _contagion()
    again = validate_model(parse_model(copy.deepcopy(to_raw(model))))
    assert again.digest == model.digest
    np.testing.assert_array_equal(again.base_tensors, model.base_tensors)
    np.testing.assert_array_equal(again.reward_selectors, model.reward_selectors)


def test_random_models_are_symmetric():
    # symmetrize_kernel output passes validation for two and three agents
    for n_corr in (2, 3):
        model = random_model(7, n_corr=n_corr, n_weights=2)
        assert len(model.permutations) == len(list(itertools.permutations(range(n_corr))))
        z = np.random.default_rng(8).dirichlet(np.ones(model.n_joint_states))
        assert abs(kernel_eval(model, z, 0, 0).sum() - 1.0) <= 1e-12
