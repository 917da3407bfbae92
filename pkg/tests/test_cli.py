from corrmfg.cli import solve_mfe
from corrmfg.cli.common import EXIT_INVALID_INPUT, EXIT_OK, EXIT_SOLVER_FAILURE, parse_z1
from corrmfg.cli.main import main
from corrmfg.config import SolverOptions
from corrmfg.grid import build_simplex_grid
from corrmfg.mfe import solve_mfe_finite
from corrmfg.model import bundled_model_path, load_model
from corrmfg.report import load_report

import json
import logging

import numpy as np
import pandas as pd
import pytest


def _run(argv):
    with pytest.raises(SystemExit) as excinfo:
        main(argv + ["--no-progress", "--log-level", "WARNING"])
    return excinfo.value.code


@pytest.fixture(scope="module")
def game_report(tmp_path_factory):
    out = tmp_path_factory.mktemp("game") / "game.json"
    code = _run(["solve-mfe", "--model", str(bundled_model_path("contagion2")), "--grid-res", "4",
                 "--horizon", "1", "--out", str(out)])
    assert code == EXIT_OK
    return out


def test_solve_mfe_writes_a_report(game_report):
    report = json.loads(game_report.read_text())
    assert report["status"] == "ok"
    assert report["kind"] == "game"
    assert report["horizon"] == 1
    assert report["grid"]["n_nodes"] == 35
    assert report["bellman_residual"] <= 1e-12
    assert report["meta"]["config"]["grid_res"] == 4


def test_standalone_command_entry_point(tmp_path):
    out = tmp_path / "game.json"
    with pytest.raises(SystemExit) as excinfo:
        solve_mfe.main(["--model", str(bundled_model_path("uniform2")), "--grid-res", "2", "--horizon", "1",
                        "--out", str(out), "--no-progress"])
    assert excinfo.value.code == EXIT_OK
    assert out.exists()


def test_solve_team(tmp_path):
    out = tmp_path / "team.json"
    plots = tmp_path / "plots"
    code = _run(["solve-team", "--model", str(bundled_model_path("uniform2")), "--grid-res", "2",
                 "--out", str(out), "--plot-dir", str(plots)])
    assert code == EXIT_OK
    assert json.loads(out.read_text())["kind"] == "team"
    assert (plots / "values.csv").exists()
    assert (plots / "residual_trace.csv").exists()


def test_missing_model_is_invalid_input(tmp_path, caplog):
    with caplog.at_level(logging.ERROR):
        code = _run(["solve-mfe", "--model", str(tmp_path / "nowhere.json"), "--out", str(tmp_path / "x.json")])
    assert code == EXIT_INVALID_INPUT
    assert "nowhere.json" in caplog.text
    assert not (tmp_path / "x.json").exists()


def test_bad_grid_resolution_is_invalid_input(tmp_path):
    code = _run(["solve-team", "--model", str(bundled_model_path("uniform2")), "--grid-res", "0",
                 "--out", str(tmp_path / "team.json")])
    assert code == EXIT_INVALID_INPUT


def test_verify_report_certifies(tmp_path, game_report):
    out = tmp_path / "verdict.json"
    code = _run(["verify", "--report", str(game_report), "--mode", "resolve", "--eps", "1e-4", "--out", str(out)])
    assert code == EXIT_OK
    verdict = json.loads(out.read_text())
    assert verdict["verdict"] == "CERTIFIED_EPS"
    assert verdict["witness"] is None
    assert len(verdict["meanfields"]) == 2


def test_verify_refutes_a_bad_pair(tmp_path):
    # Types never move; playing action 1 in type 0 forfeits a reward of 1 per stage
    paths = tmp_path / "paths.json"
    paths.write_text(json.dumps({
        "prescriptions": [[[0.0, 1.0], [0.0, 1.0]]] * 2,
        "meanfields": [[0.5, 0.5]] * 3,
    }))
    out = tmp_path / "verdict.json"
    code = _run(["verify", "--model", str(bundled_model_path("identity1")), "--paths", str(paths),
                 "--out", str(out)])
    assert code == EXIT_SOLVER_FAILURE
    verdict = json.loads(out.read_text())
    assert verdict["verdict"] == "REFUTED"
    assert verdict["consistency_residual"] == 0.0
    assert verdict["witness"]["stage"] == 1
    assert verdict["witness"]["type"] == 0
    assert verdict["witness"]["action"] == 0
    assert verdict["witness"]["gain"] == pytest.approx(1.9, abs=1e-12)


def test_verify_paths_needs_a_model(tmp_path):
    paths = tmp_path / "paths.json"
    paths.write_text(json.dumps({"prescriptions": [], "meanfields": [[1.0]]}))
    assert _run(["verify", "--paths", str(paths), "--out", str(tmp_path / "v.json")]) == EXIT_INVALID_INPUT


def test_assemble_writes_paths(tmp_path, game_report):
    code = _run(["assemble", "--report", str(game_report), "--out", str(tmp_path)])
    assert code == EXIT_OK
    zpath = pd.read_csv(tmp_path / "zpath.csv")
    prescriptions = pd.read_csv(tmp_path / "prescriptions.csv")
    assert sorted(zpath["t"].unique()) == [1, 2]
    assert len(prescriptions) == 2 * 2
    np.testing.assert_allclose(prescriptions.groupby(["t", "state"])["probability"].sum(), 1.0, atol=1e-12)


def test_assemble_rejects_a_different_model(tmp_path, game_report):
    code = _run(["assemble", "--report", str(game_report), "--model", str(bundled_model_path("uniform2")),
                 "--out", str(tmp_path)])
    assert code == EXIT_INVALID_INPUT


def test_simulate_writes_population_and_values(tmp_path, game_report):
    out = tmp_path / "sim.csv"
    code = _run(["simulate", "--report", str(game_report), "--blocks", "500", "--samples", "200",
                 "--seed", "3", "--out", str(out)])
    assert code == EXIT_OK
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["t", "joint_index", "empirical", "deterministic", "tv"]
    assert len(frame) == 2 * 4
    values = json.loads((tmp_path / "sim.values.json").read_text())
    assert sorted(values) == ["0", "1"]
    for entry in values.values():
        assert abs(entry["mean"] - entry["predicted"]) <= 5 * entry["std_error"] + 1e-9


def test_parse_z1():
    model = load_model(bundled_model_path("contagion2"))
    np.testing.assert_array_equal(parse_z1(None, model), model.initial_meanfield)
    np.testing.assert_array_equal(parse_z1("initial", model), model.initial_meanfield)
    np.testing.assert_allclose(parse_z1("[0.1, 0.2, 0.3, 0.4]", model), [0.1, 0.2, 0.3, 0.4])
    np.testing.assert_allclose(parse_z1("0.25,0.25,0.25,0.25", model), 0.25)


def test_solve_mfe_tables_match_the_library(tmp_path):
    # Command defaults are the library defaults with seed 0
    out = tmp_path / "game.json"
    code = _run(["solve-mfe", "--model", str(bundled_model_path("contagion2")), "--grid-res", "8",
                 "--horizon", "3", "--out", str(out)])
    assert code == EXIT_OK

    model = load_model(bundled_model_path("contagion2"))
    expected = solve_mfe_finite(model, 3, build_simplex_grid(4, 8), SolverOptions(progress=False))
    _, solution, raw = load_report(out)
    assert raw["grid"]["n_nodes"] == 165
    assert solution.values.shape == expected.values.shape
    np.testing.assert_allclose(solution.values[0], expected.values[0], atol=1e-9, rtol=0)
    np.testing.assert_allclose(solution.policies[0], expected.policies[0], atol=1e-9, rtol=0)
