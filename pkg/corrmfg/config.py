"""
Solver options and command-line run configuration.
"""

import os
from dataclasses import dataclass, field, asdict
from typing import Optional, Union

DEFAULT_GRID_CAP = 5_000_000
GRID_CAP_ENV = "CORRMFG_GRID_CAP"

SUBCOMMANDS = ("solve-team", "solve-mfe", "verify", "simulate", "assemble")
OTHERS_LAWS = ("marginal", "conditional")


def grid_cap() -> int:
    """Maximum number of grid nodes, overridable through CORRMFG_GRID_CAP."""
    raw = os.environ.get(GRID_CAP_ENV)
    if raw is None or raw == "":
        return DEFAULT_GRID_CAP
    cap = int(raw)
    if cap < 1:
        raise ValueError(f"{GRID_CAP_ENV} must be a positive integer, got {raw!r}")
    return cap


def default_grid_resolution(dim: int) -> int:
    if dim <= 4:
        return 10
    if dim <= 9:
        return 5
    return 3


@dataclass
class SolverOptions:
    """
    Numerical knobs shared by the team and game solvers.

    :param opt_tol: minimum improvement accepted by the prescription ascent
    :param n_random_starts: random mixed starting points per node
    :param max_local_iter: maximum ascent sweeps per start
    :param eps_consistency: tolerance of the per-stage fixed-point check
    :param damping: step of the damped best-response iteration, in (0, 1]
    :param max_iter: maximum damped best-response iterations per start
    :param vi_tol: sup-norm stopping tolerance of value iteration
    :param vi_max_iter: maximum outer value iterations
    :param seed: root seed for the random starts
    :param enumerate_all_pure: record every consistent pure prescription per node
    :param progress: show tqdm progress bars
    """

    opt_tol: float = 1e-8
    n_random_starts: int = 8
    max_local_iter: int = 200
    eps_consistency: float = 1e-6
    damping: float = 0.5
    max_iter: int = 500
    vi_tol: float = 1e-8
    vi_max_iter: int = 1000
    seed: int = 0
    enumerate_all_pure: bool = False
    progress: bool = True

    def validate(self) -> "SolverOptions":
        for name in ("opt_tol", "eps_consistency", "vi_tol"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError(f"damping must lie in (0, 1], got {self.damping}")
        if self.n_random_starts < 0 or self.max_local_iter < 1 or self.max_iter < 1 or self.vi_max_iter < 1:
            raise ValueError("iteration counts must be positive")
        return self


@dataclass
class RunConfig:
    """Everything one CLI invocation needs."""

    subcommand: str
    model_path: Optional[str] = None
    report_path: Optional[str] = None
    out_path: Optional[str] = None
    plot_dir: Optional[str] = None
    grid_res: Optional[int] = None
    horizon: Optional[Union[int, str]] = None
    z1: Optional[str] = None
    n_blocks: int = 100_000
    n_samples: int = 0
    opt_tol: float = 1e-8
    eps_consistency: float = 1e-6
    vi_tol: float = 1e-8
    eps_certificate: float = 1e-5
    seed: int = 0
    enumerate_all_pure: bool = False
    others_law: str = "marginal"
    assemble_mode: str = "interpolate"
    paths_path: Optional[str] = None
    log_level: str = "INFO"
    progress: bool = True
    solver: SolverOptions = field(default_factory=SolverOptions)

    def validate(self) -> "RunConfig":
        if self.subcommand not in SUBCOMMANDS:
            raise ValueError(f"unknown subcommand {self.subcommand!r}")
        if self.grid_res is not None and self.grid_res < 1:
            raise ValueError(f"grid resolution must be at least 1, got {self.grid_res}")
        for name in ("opt_tol", "eps_consistency", "vi_tol", "eps_certificate"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.others_law not in OTHERS_LAWS:
            raise ValueError(f"others law must be one of {OTHERS_LAWS}, got {self.others_law!r}")
        if self.assemble_mode not in ("interpolate", "resolve"):
            raise ValueError(f"assemble mode must be interpolate or resolve, got {self.assemble_mode!r}")
        if self.n_blocks < 1:
            raise ValueError(f"number of blocks must be at least 1, got {self.n_blocks}")
        self.solver.opt_tol = self.opt_tol
        self.solver.eps_consistency = self.eps_consistency
        self.solver.vi_tol = self.vi_tol
        self.solver.seed = self.seed
        self.solver.enumerate_all_pure = self.enumerate_all_pure
        self.solver.progress = self.progress
        self.solver.validate()
        return self

    def to_dict(self) -> dict:
        return asdict(self)
