"""
Report files: solver output as JSON, plot data and trajectories as CSV.

A report embeds the raw model, the grid metadata and every node table, so the
``assemble``, ``verify`` and ``simulate`` commands can work from the report
alone. Floats go through ``json`` which writes the shortest repr that reads
back to the same double, so reloaded tables are bit-equal. Files are written
to a temporary sibling and moved into place.
"""

import json
import logging
import os
import platform
import tempfile
import time
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd
import scipy

from . import __version__
from .grid import build_simplex_grid
from .mfe import FixedPointDiagnostics, GameSolution
from .model import INFINITE, ValidatedModel, parse_model, to_raw, validate_model
from .team import NodeDiagnostics, TeamSolution

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def atomic_write_text(path: PathLike, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    return path


def write_json(path: PathLike, payload: dict) -> Path:
    path = atomic_write_text(path, json.dumps(payload, indent=1, allow_nan=True))
    logger.info(f"wrote {path}")
    return path


def write_csv(path: PathLike, frame: pd.DataFrame) -> Path:
    path = atomic_write_text(path, frame.to_csv(index=False, float_format="%.17g"))
    logger.info(f"wrote {path} ({len(frame)} rows)")
    return path


def make_meta(model: Optional[ValidatedModel], config: Optional[dict] = None, started: Optional[float] = None) -> dict:
    """Provenance block: model hash, configuration, package versions, wall-clock."""
    finished = time.time()
    return {
        "model_sha256": model.digest if model is not None else None,
        "config": config or {},
        "versions": {
            "corrmfg": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pandas": pd.__version__,
            "python": platform.python_version(),
        },
        "started": started if started is not None else finished,
        "finished": finished,
        "wall_clock_seconds": finished - started if started is not None else 0.0,
    }


def solution_to_dict(solution: Union[TeamSolution, GameSolution]) -> dict:
    kind = "team" if isinstance(solution, TeamSolution) else "game"
    payload = {
        "kind": kind,
        "grid": solution.grid.metadata(),
        "horizon": INFINITE if solution.stationary else solution.horizon,
        "values": np.asarray(solution.values).tolist(),
        "policies": np.asarray(solution.policies).tolist(),
        "diagnostics": [[d._asdict() for d in stage] for stage in solution.diagnostics],
        "residual_trace": list(solution.residual_trace),
    }
    if kind == "game":
        payload["pure_fixed_points"] = solution.pure_fixed_points
    return payload


def solution_report(model: ValidatedModel, solution, config: Optional[dict] = None,
                    started: Optional[float] = None, error: Optional[BaseException] = None) -> dict:
    """
    Full report dictionary for a (possibly partial) solution.

    ``status`` is ``ok`` or ``failed``; a failed report carries the error
    message, the error residual and whatever the solver had finished.
    """
    report = {"meta": make_meta(model, config, started), "model": to_raw(model),
              "others_law": model.others_law}
    if solution is not None:
        report.update(solution_to_dict(solution))
    report["status"] = "ok" if error is None else "failed"
    report["error"] = None
    if error is not None:
        report["error"] = {
            "type": type(error).__name__,
            "message": str(error),
            "residual": getattr(error, "residual", None),
            "stage": getattr(error, "stage", None),
            "node": getattr(error, "node", None),
        }
    return report


def save_report(path: PathLike, report: dict) -> Path:
    return write_json(path, report)


def _restore_solution(report: dict, model: ValidatedModel):
    meta = report["grid"]
    grid = build_simplex_grid(meta["dim"], meta["resolution"])
    horizon = None if report["horizon"] == INFINITE else int(report["horizon"])
    values = np.asarray(report["values"], dtype=float)
    policies = np.asarray(report["policies"], dtype=float).reshape(
        -1, grid.n_nodes, model.n_states, model.n_actions
    )
    trace = [float(r) for r in report.get("residual_trace", [])]
    if report["kind"] == "team":
        diagnostics = [[NodeDiagnostics(**d) for d in stage] for stage in report.get("diagnostics", [])]
        return TeamSolution(grid, values, policies, horizon, diagnostics, trace)
    diagnostics = [[FixedPointDiagnostics(**d) for d in stage] for stage in report.get("diagnostics", [])]
    return GameSolution(grid, values.reshape(-1, grid.n_nodes, model.n_states), policies, horizon,
                        diagnostics, trace, report.get("pure_fixed_points"))


def load_report(path: PathLike):
    """
    Read a report written by ``save_report``.

    :returns: (ValidatedModel, solution or None, raw report dictionary)
    :raises FileNotFoundError: if ``path`` does not exist
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"report file not found: {path}")
    report = json.loads(path.read_text(encoding="utf-8"))
    raw_model = report["model"]
    model = validate_model(parse_model(raw_model, name=raw_model.get("name", path.stem)),
                           others_law=report.get("others_law", "marginal"))
    solution = _restore_solution(report, model) if "kind" in report else None
    return model, solution, report


def value_frame(solution) -> pd.DataFrame:
    """One row per (stage, node): node coordinates and the value(s) there."""
    grid = solution.grid
    n_stages = len(solution.policies)
    coordinate_columns = [f"z{j}" for j in range(grid.dim)]
    values = np.asarray(solution.values)[:n_stages]
    if values.ndim == 2:
        value_columns = ["value"]
        flat = values.reshape(n_stages * grid.n_nodes, 1)
    else:
        value_columns = [f"value_x{x}" for x in range(values.shape[2])]
        flat = values.reshape(n_stages * grid.n_nodes, values.shape[2])
    frame = pd.DataFrame(flat, columns=value_columns)
    frame.insert(0, "node", np.tile(np.arange(grid.n_nodes), n_stages))
    frame.insert(0, "stage", np.repeat(np.arange(1, n_stages + 1), grid.n_nodes))
    coordinates = pd.DataFrame(np.tile(grid.nodes, (n_stages, 1)), columns=coordinate_columns)
    return pd.concat([frame.iloc[:, :2], coordinates, frame.iloc[:, 2:]], axis=1)


def zpath_frame(trajectory=None) -> pd.DataFrame:
    if trajectory is None:
        return pd.DataFrame(columns=["t", "joint_index", "probability"])
    return trajectory.meanfield_frame()


def residual_frame(solution) -> pd.DataFrame:
    trace = list(solution.residual_trace)
    return pd.DataFrame({"iteration": np.arange(1, len(trace) + 1), "residual": trace})


def emit_plot_data(solution, out_dir: PathLike, trajectory=None) -> dict:
    """
    Write values.csv, zpath.csv and residual_trace.csv for external plotting.

    :returns: mapping of table name to written path
    """
    out_dir = Path(out_dir)
    return {
        "values": write_csv(out_dir / "values.csv", value_frame(solution)),
        "zpath": write_csv(out_dir / "zpath.csv", zpath_frame(trajectory)),
        "residual_trace": write_csv(out_dir / "residual_trace.csv", residual_frame(solution)),
    }


def write_trajectory(out_dir: PathLike, trajectory) -> dict:
    """Mean-field path and prescription path as two CSV files."""
    out_dir = Path(out_dir)
    return {
        "zpath": write_csv(out_dir / "zpath.csv", trajectory.meanfield_frame()),
        "prescriptions": write_csv(out_dir / "prescriptions.csv", trajectory.prescription_frame()),
    }


def simulation_frame(empirical: np.ndarray, deterministic: np.ndarray, tv: np.ndarray) -> pd.DataFrame:
    """Columns t, joint_index, empirical, deterministic, tv (TV repeated per row of its t)."""
    n_steps, n_joint = empirical.shape
    return pd.DataFrame({
        "t": np.repeat(np.arange(1, n_steps + 1), n_joint),
        "joint_index": np.tile(np.arange(n_joint), n_steps),
        "empirical": empirical.ravel(),
        "deterministic": deterministic.ravel(),
        "tv": np.repeat(tv, n_joint),
    })
