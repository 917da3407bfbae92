"""
Composition grid over the probability simplex and Kuhn (Freudenthal)
simplicial interpolation on it.

Grid nodes are the compositions (k_1, ..., k_dim) / r with sum k_i = r. In the
cumulative coordinates s_j = r * (z_1 + ... + z_j), j < dim, nodes are the
monotone integer points of [0, r]^(dim-1), and the Kuhn triangulation of that
cube restricts to a triangulation of the simplex. Interpolation is therefore
piecewise linear, continuous, exact on nodes and reproduces affine functions.
"""

import logging
from collections import namedtuple
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import comb

from .config import grid_cap
from .errors import GridTooLargeError

logger = logging.getLogger(__name__)

# Cumulative coordinates this close to an integer are snapped onto it, so that
# mean fields sitting on a node pick up that node's value exactly.
SNAP_TOL = 1e-9


class SimplexGrid:
    """
    Composition grid of resolution ``resolution`` over the simplex in R^dim.

    :param dim: number of simplex coordinates (Nx^N for mean fields)
    :param resolution: denominator r of the node coordinates
    :param compositions: integer node table, lexicographic order
    """

    def __init__(self, dim: int, resolution: int, compositions: np.ndarray):
        self.dim = int(dim)
        self.resolution = int(resolution)
        self.compositions = compositions
        self.compositions.setflags(write=False)
        self.nodes = compositions / float(resolution)
        self.nodes.setflags(write=False)
        self._index: Dict[Tuple[int, ...], int] = {
            tuple(int(k) for k in row): i for i, row in enumerate(compositions)
        }

    def __len__(self) -> int:
        return len(self.compositions)

    @property
    def n_nodes(self) -> int:
        return len(self.compositions)

    def node_index(self, composition: Sequence[int]) -> int:
        return self._index[tuple(int(k) for k in composition)]

    def find_node(self, z: np.ndarray) -> Optional[int]:
        """Index of the node equal to ``z`` (within the snap tolerance), else None."""
        scaled = np.asarray(z, dtype=float) * self.resolution
        rounded = np.rint(scaled)
        if np.abs(scaled - rounded).max() > SNAP_TOL or rounded.sum() != self.resolution:
            return None
        return self._index.get(tuple(int(k) for k in rounded))

    def metadata(self) -> dict:
        return {"dim": self.dim, "resolution": self.resolution, "n_nodes": self.n_nodes}

    def __repr__(self):
        return f"SimplexGrid(dim={self.dim}, resolution={self.resolution}, n_nodes={self.n_nodes})"


def grid_node_count(dim: int, resolution: int) -> int:
    return int(comb(resolution + dim - 1, dim - 1, exact=True))


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def compositions_of(total: int, parts: int) -> List[Tuple[int, ...]]:
    """All compositions of ``total`` into ``parts`` nonnegative parts, lexicographic."""
    return list(_compositions(total, parts))


def build_simplex_grid(dim: int, resolution: int, cap: Optional[int] = None) -> SimplexGrid:
    """
    Enumerate all compositions of ``resolution`` into ``dim`` parts.

    :param cap: maximum node count (defaults to the configured grid cap)
    :raises GridTooLargeError: if the node count exceeds the cap
    """
    if dim < 1 or resolution < 1:
        raise ValueError(f"grid needs dim >= 1 and resolution >= 1, got dim={dim}, resolution={resolution}")
    cap = grid_cap() if cap is None else cap
    count = grid_node_count(dim, resolution)
    if count > cap:
        raise GridTooLargeError(
            f"grid with dim={dim} and resolution={resolution} has {count} nodes, cap is {cap}",
            node_count=count,
            cap=cap,
        )
    compositions = np.array(list(_compositions(resolution, dim)), dtype=int).reshape(count, dim)
    logger.debug(f"built simplex grid dim={dim}, r={resolution}: {count} nodes")
    return SimplexGrid(dim, resolution, compositions)


def kuhn_simplex(grid: SimplexGrid, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vertices and barycentric weights of the Kuhn simplex containing ``z``.

    Only vertices with positive weight are returned.

    :returns: (node indices, weights); weights are positive and sum to 1
    """
    if grid.dim == 1:
        return np.zeros(1, dtype=int), np.ones(1)

    r = grid.resolution
    cumulative = np.cumsum(np.asarray(z, dtype=float)[:-1]) * r
    nearest = np.rint(cumulative)
    cumulative = np.where(np.abs(cumulative - nearest) < SNAP_TOL, nearest, cumulative)
    cumulative = np.maximum.accumulate(np.clip(cumulative, 0.0, r))

    base = np.floor(cumulative)
    frac = cumulative - base
    # Descending fractional parts; ties go to the higher coordinate first so
    # every vertex stays monotone (a valid composition).
    order = np.lexsort((-np.arange(frac.size), -frac))
    sorted_frac = frac[order]

    weights = np.empty(grid.dim)
    weights[0] = 1.0 - sorted_frac[0]
    weights[1:-1] = sorted_frac[:-1] - sorted_frac[1:]
    weights[-1] = sorted_frac[-1]

    vertex = base.astype(int)
    indices, kept = [], []
    for k in range(grid.dim):
        if k > 0:
            vertex[order[k - 1]] += 1
        if weights[k] > 0.0:
            composition = np.diff(np.concatenate(([0], vertex, [r])))
            indices.append(grid.node_index(composition))
            kept.append(weights[k])
    return np.array(indices, dtype=int), np.array(kept)


def interpolate_value(grid: SimplexGrid, values: np.ndarray, z: np.ndarray):
    """
    Piecewise-linear interpolation of a node table at ``z``.

    :param values: array whose first axis runs over grid nodes; trailing axes
        (e.g. one value per type) are interpolated together
    """
    indices, weights = kuhn_simplex(grid, z)
    result = np.tensordot(weights, np.asarray(values)[indices], axes=1)
    return float(result) if np.ndim(result) == 0 else result


def interpolate_prescription(grid: SimplexGrid, policies: np.ndarray, z: np.ndarray) -> np.ndarray:
    """
    Barycentric blend of the vertex prescriptions around ``z``, rows renormalised.

    :param policies: node table of prescriptions, shape (n_nodes, Nx, Na)
    """
    indices, weights = kuhn_simplex(grid, z)
    if indices.size == 1:
        return np.array(policies[indices[0]], dtype=float)
    blended = np.tensordot(weights, np.asarray(policies)[indices], axes=1)
    return blended / blended.sum(axis=1, keepdims=True)


class ValueTable(namedtuple("ValueTable", ["grid", "values"])):
    """
    Continuation value V(z, .) stored on grid nodes and evaluated anywhere by
    interpolation. ``values`` has shape (n_nodes,) for teams and (n_nodes, Nx)
    for games.
    """

    __slots__ = ()

    def __call__(self, z):
        return interpolate_value(self.grid, self.values, z)


class PolicyTable(namedtuple("PolicyTable", ["grid", "policies", "stationary"], defaults=(False,))):
    """
    Tabulated equilibrium generating function theta_t.

    ``policies`` has shape (T, n_nodes, Nx, Na). A stationary table holds a
    single stage that is used for every t (infinite horizon).
    """

    __slots__ = ()

    @property
    def n_stages(self) -> int:
        return len(self.policies)

    def __call__(self, t: int, z) -> np.ndarray:
        stage = 0 if self.stationary else t - 1
        return interpolate_prescription(self.grid, self.policies[stage], z)
