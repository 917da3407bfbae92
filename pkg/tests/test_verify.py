from corrmfg.builders import action_model, constant_reward_model, identity_model
from corrmfg.config import SolverOptions
from corrmfg.errors import HorizonMismatchError, OracleTooLargeError
from corrmfg.grid import build_simplex_grid
from corrmfg.meanfield import lambda_rollout
from corrmfg.mfe import consistent_pure_prescriptions, solve_mfe_finite, solve_mfe_infinite
from corrmfg.model import bundled_model_path, load_model, marginal, reward_bound, reward_table
from corrmfg.verify import (
    CERTIFIED,
    REFUTED,
    best_deviation_gain,
    brute_force_team,
    check_consistency,
    deviation_tables,
    focal_law,
    pure_mfe_by_definition,
    total_variation,
    truncation_horizon,
    verify_mfe,
    verify_paths,
)

import itertools

import numpy as np
import pytest

QUIET = SolverOptions(progress=False)


@pytest.fixture(scope="module")
def contagion():
    return load_model(bundled_model_path("contagion2"))


@pytest.fixture(scope="module")
def contagion_path(contagion):
    solution = solve_mfe_finite(contagion, 2, build_simplex_grid(4, 8), QUIET)
    report, gammas, trajectory = verify_mfe(contagion, solution, contagion.initial_meanfield, mode="resolve",
                                            opts=QUIET)
    return gammas, trajectory.meanfields


def _deviation_value(model, zpath, gammas, x0, plan):
    # Forward value of one deterministic deviation plan, plan[t][x] = action
    law = np.eye(model.n_states)[x0]
    total = 0.0
    for t, (z, gamma) in enumerate(zip(zpath, gammas)):
        rewards = reward_table(model, z)
        actions = plan[t]
        total += model.discount ** t * sum(law[x] * rewards[x, actions[x]] for x in range(model.n_states))
        transition = focal_law(model, z, gamma)
        law = sum(law[x] * transition[x, actions[x]] for x in range(model.n_states))
    return total


def test_consistency_of_rollouts(contagion):
    gammas = [np.array([[0.7, 0.3], [0.2, 0.8]])] * 3
    path = lambda_rollout(contagion, contagion.initial_meanfield, gammas, 3).meanfields
    assert check_consistency(contagion, gammas, path) == 0.0

    tampered = [z.copy() for z in path]
    tampered[1] = np.full(4, 0.25)
    assert check_consistency(contagion, gammas, tampered) == pytest.approx(total_variation(path[1], tampered[1]))

    with pytest.raises(HorizonMismatchError):
        check_consistency(contagion, gammas, path[:3])


def test_zero_discount_best_response_has_no_gain():
    model = identity_model(discount=0.0)
    z = np.array([0.4, 0.6])
    gamma = np.eye(2)[reward_table(model, z).argmax(axis=1)]
    path = lambda_rollout(model, z, [gamma] * 3, 3).meanfields
    for t0, x0 in itertools.product(range(1, 4), range(2)):
        assert best_deviation_gain(model, path, [gamma] * 3, t0=t0, x0=x0) == 0.0


def test_single_action_always_certifies():
    model = identity_model(n_corr=2, n_actions=1)
    gammas = [np.ones((2, 1))] * 3
    path = lambda_rollout(model, model.initial_meanfield, gammas, 3).meanfields
    report = verify_paths(model, gammas, path, 1e-12)
    assert report.verdict == CERTIFIED
    assert report.max_deviation_gain == 0.0


def test_deviation_program_matches_plan_enumeration(contagion, contagion_path):
    # All 2^(2*2) deterministic Markov deviation plans over two stages
    gammas, zpath = contagion_path
    best, follow, _ = deviation_tables(contagion, zpath, gammas)
    plans = list(itertools.product(range(2), repeat=2))
    for x0 in range(2):
        enumerated = max(_deviation_value(contagion, zpath, gammas, x0, plan)
                         for plan in itertools.product(plans, repeat=2))
        assert abs(best[0, x0] - enumerated) <= 1e-12
        assert best[0, x0] >= follow[0, x0] - 1e-12


def test_equilibrium_path_certifies(contagion, contagion_path):
    gammas, zpath = contagion_path
    report = verify_paths(contagion, gammas, zpath, 1e-5)
    assert report.certified
    assert report.witness is None
    for t0, x0 in itertools.product(range(1, 3), range(2)):
        assert best_deviation_gain(contagion, zpath, gammas, t0=t0, x0=x0) <= 1e-5


def test_worst_response_is_refuted(contagion, contagion_path):
    # Play the worst action everywhere at stage 1, on the path it generates
    gammas, zpath = contagion_path
    _, _, deviations = deviation_tables(contagion, zpath, gammas)
    worst = np.eye(2)[deviations[0].argmin(axis=1)]
    perturbed = [worst] + list(gammas[1:])
    path = lambda_rollout(contagion, zpath[0], perturbed, 2).meanfields
    report = verify_paths(contagion, perturbed, path, 1e-5)
    assert report.verdict == REFUTED
    assert report.witness["gain"] > 1e-5
    assert report.witness["stage"] in (1, 2)

    # The untouched path no longer matches the perturbed prescriptions
    if not np.array_equal(worst, gammas[0]):
        assert verify_paths(contagion, perturbed, zpath, 1.0).consistency_residual > 0.0


def test_terminal_value_enters_the_certificate():
    model = identity_model(reward_base=np.zeros((2, 2)), discount=0.5, horizon=1)
    gamma = np.array([[1.0, 0.0], [1.0, 0.0]])
    path = lambda_rollout(model, np.array([0.5, 0.5]), [gamma], 1).meanfields
    best, follow, _ = deviation_tables(model, path, [gamma], v_terminal=np.array([2.0, 4.0]))
    np.testing.assert_allclose(best[0], [1.0, 2.0])
    np.testing.assert_allclose(follow[0], [1.0, 2.0])


def test_brute_force_team():
    model = load_model(bundled_model_path("contagion2"))
    z = model.initial_meanfield
    expected = float(marginal(model, z) @ reward_table(model, z).max(axis=1))
    assert brute_force_team(model, z, 1) == pytest.approx(expected, abs=1e-15)

    constant = constant_reward_model(2.0, discount=0.9, horizon=3)
    assert brute_force_team(constant, constant.initial_meanfield, 3) == pytest.approx(2.0 * 2.71, abs=1e-12)

    with pytest.raises(OracleTooLargeError):
        brute_force_team(model, z, 3, mix_resolution=10, cap=1000)


def test_truncation_horizon():
    model = load_model(bundled_model_path("identity1"))
    eps = 1e-5
    horizon = truncation_horizon(model, eps)
    tail = 2 * model.discount ** horizon * reward_bound(model) / (1 - model.discount)
    assert tail <= eps / 2
    assert 2 * model.discount ** (horizon - 1) * reward_bound(model) / (1 - model.discount) > eps / 2


def test_infinite_horizon_certificate():
    model = load_model(bundled_model_path("identity1"))
    solution = solve_mfe_infinite(model, build_simplex_grid(2, 4), tol=1e-10, opts=QUIET)
    report, gammas, _ = verify_mfe(model, solution, np.array([0.3, 0.7]), eps=1e-5)
    assert report.certified
    assert len(gammas) == truncation_horizon(model, 1e-5)
    assert 0.0 < report.tail_bound <= 1e-5 / 2

    # A short truncation leaves a tail too large to certify
    report, _, _ = verify_mfe(model, solution, np.array([0.3, 0.7]), horizon=5, eps=1e-5)
    assert report.verdict == REFUTED


def test_pure_equilibria_pass_stage_consistency():
    # Every pure MFE found from the definition is consistent stage by stage
    model = action_model(horizon=2)
    z1 = np.array([0.5, 0.5])
    found = pure_mfe_by_definition(model, z1, 2)
    assert found
    for choices, gammas, zpath in found:
        last = [c for c, _, _ in consistent_pure_prescriptions(model, zpath[1], None, 1e-9)]
        assert choices[1] in last

        def follow_last(z, gamma=gammas[1]):
            return (gamma * reward_table(model, z)).sum(axis=1)

        first = [c for c, _, _ in consistent_pure_prescriptions(model, zpath[0], follow_last, 1e-9)]
        assert choices[0] in first


def test_pure_mfe_oracle_cap():
    model = action_model(horizon=2)
    with pytest.raises(OracleTooLargeError):
        pure_mfe_by_definition(model, np.array([0.5, 0.5]), 6, cap=100)


def test_pure_equilibria_appear_in_solver_listing():
    # Every pure MFE visits grid nodes only, and its stage choices are among
    # the consistent pure prescriptions the solver lists at those nodes
    model = action_model(horizon=2)
    z1 = np.array([0.5, 0.5])
    grid = build_simplex_grid(2, 2)
    solution = solve_mfe_finite(model, 2, grid, SolverOptions(enumerate_all_pure=True, progress=False))
    listing = solution.pure_fixed_points

    found = pure_mfe_by_definition(model, z1, 2)
    assert found
    first = grid.find_node(z1)
    for choices, gammas, zpath in found:
        second = grid.find_node(zpath[1])
        assert second is not None
        assert list(choices[1]) in listing[1][second]
        # The stage-1 listing is built on the solver's own stage-2 selection
        if np.array_equal(solution.policies[1, second], gammas[1]):
            assert list(choices[0]) in listing[0][first]
