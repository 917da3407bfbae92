"""
Deterministic forward dynamics of the correlated mean field.

phi_update is the discrete-time Fokker-Planck step z' = phi(z, gamma);
lambda_rollout chains it into the mean-field path generated by a policy.
"""

import logging
from collections import namedtuple
from typing import Callable, Optional, Sequence, Union

import numpy as np
import pandas as pd

from .errors import HorizonMismatchError
from .grid import PolicyTable
from .model import NEGATIVE_CLAMP, ValidatedModel, joint_action_probs, kernel_tensor

logger = logging.getLogger(__name__)


class Trajectory(namedtuple("Trajectory", ["meanfields", "prescriptions"])):
    """
    Mean-field path z_1..z_{T+1} together with the prescriptions gamma_1..gamma_T
    that generated it.
    """

    __slots__ = ()

    @property
    def horizon(self) -> int:
        return len(self.prescriptions)

    def meanfield_frame(self) -> pd.DataFrame:
        """Long table with columns t, joint_index, probability."""
        rows = [
            (t, j, float(p))
            for t, z in enumerate(self.meanfields, start=1)
            for j, p in enumerate(z)
        ]
        return pd.DataFrame(rows, columns=["t", "joint_index", "probability"])

    def prescription_frame(self) -> pd.DataFrame:
        """Long table with columns t, state, action, probability."""
        rows = [
            (t, x, a, float(p))
            for t, gamma in enumerate(self.prescriptions, start=1)
            for x, row in enumerate(gamma)
            for a, p in enumerate(row)
        ]
        return pd.DataFrame(rows, columns=["t", "state", "action", "probability"])


def phi_update(model: ValidatedModel, z: np.ndarray, gamma: np.ndarray,
               kernel: Optional[np.ndarray] = None) -> np.ndarray:
    """
    One Fokker-Planck step of the correlated mean field.

    z'(jx') = sum_{jx, ja} z(jx) Q(jx' | z, jx, ja) prod_i gamma(a^i | x^i)

    :param kernel: the mixed kernel at ``z`` if the caller already has it
    """
    if kernel is None:
        kernel = kernel_tensor(model, z)
    flow = z[:, None] * joint_action_probs(model, gamma)
    z_next = np.einsum("pxa,xa->p", kernel, flow)
    z_next[(z_next < 0.0) & (z_next >= -NEGATIVE_CLAMP)] = 0.0
    return z_next


PrescriptionSource = Union[Sequence[np.ndarray], PolicyTable, Callable[[int, np.ndarray], np.ndarray]]


def prescription_at(source: PrescriptionSource, t: int, z: np.ndarray) -> np.ndarray:
    """gamma_t for stage ``t`` (1-based) at mean field ``z``."""
    if callable(source):
        return np.asarray(source(t, z), dtype=float)
    return np.asarray(source[t - 1], dtype=float)


def check_source_horizon(source: PrescriptionSource, horizon: int) -> None:
    if isinstance(source, PolicyTable):
        if not source.stationary and source.n_stages < horizon:
            raise HorizonMismatchError(
                f"policy table covers {source.n_stages} stages, rollout needs {horizon}"
            )
    elif not callable(source) and len(source) < horizon:
        raise HorizonMismatchError(f"{len(source)} prescriptions supplied, rollout needs {horizon}")


def lambda_rollout(model: ValidatedModel, z1: np.ndarray, source: PrescriptionSource, horizon: int) -> Trajectory:
    """
    Mean-field path generated from ``z1`` by a prescription source.

    :param source: a sequence gamma_1..gamma_T, a PolicyTable evaluated by
        interpolation, or any callable (t, z) -> gamma
    :param horizon: number of stages T
    :raises HorizonMismatchError: if the source covers fewer than T stages
    """
    if horizon < 1:
        raise HorizonMismatchError(f"rollout horizon must be at least 1, got {horizon}")
    check_source_horizon(source, horizon)

    meanfields = [np.asarray(z1, dtype=float).copy()]
    prescriptions = []
    for t in range(1, horizon + 1):
        gamma = prescription_at(source, t, meanfields[-1])
        prescriptions.append(gamma)
        meanfields.append(phi_update(model, meanfields[-1], gamma))
    return Trajectory(meanfields, prescriptions)


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """
    Euclidean projection onto the probability simplex (sort-based).

    Vectors that already are valid mean fields come back unchanged.
    """
    v = np.asarray(v, dtype=float)
    if np.all(v >= 0.0) and abs(v.sum() - 1.0) <= 1e-12:
        return v.copy()
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u) - 1.0
    ranks = np.arange(1, v.size + 1)
    support = u - cumulative / ranks > 0.0
    rho = ranks[support][-1]
    theta = cumulative[support][-1] / rho
    return np.maximum(v - theta, 0.0)
