from corrmfg.builders import identity_model
from corrmfg.config import SolverOptions
from corrmfg.report import load_report
from corrmfg.workflow import SolverWorkflow, solve_and_certify

import numpy as np

QUIET = SolverOptions(progress=False)


def test_complete_workflow(tmp_path):
    # Types never move and action 0 is always best, so every stage is pure
    workflow = SolverWorkflow(identity_model(), tmp_path, grid_res=4, options=QUIET)
    report = workflow.run_complete_workflow(eps=1e-8)
    assert report.certified
    assert report.max_deviation_gain <= 1e-12

    for name in ("game_report.json", "verdict.json", "zpath.csv", "prescriptions.csv"):
        assert (tmp_path / name).exists()
    assert (tmp_path / "plots" / "values.csv").exists()

    _, solution, raw = load_report(workflow.game_report)
    assert raw["meta"]["config"]["horizon"] == 3
    np.testing.assert_allclose(solution.values[0][:, 1], 2.71, atol=1e-12)
    np.testing.assert_allclose(solution.values[0][:, 0], 0.0, atol=1e-12)


def test_team_step(tmp_path):
    workflow = SolverWorkflow(identity_model(), tmp_path, grid_res=4, options=QUIET)
    solution = workflow.solve_team()
    assert workflow.team_report.exists()
    np.testing.assert_allclose(solution.values[0], workflow.grid.nodes[:, 1] * 2.71, atol=1e-12)


def test_solve_and_certify(tmp_path):
    report = solve_and_certify(identity_model(horizon=2), tmp_path / "run", grid_res=2, mode="resolve",
                               options=QUIET)
    assert report.certified
    assert report.horizon == 2
