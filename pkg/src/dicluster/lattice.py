"""Uniform cell lattice over the unit cube.

Occupied cells are stored sparsely: agent ids sorted by cell, plus the sorted
list of occupied cell coordinates. Only occupied cells cost memory, so the
lattice works in any dimension and at any cell size.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels
from .core import Ensemble


class CellLattice:
    """Agents binned into cubic cells of edge ``cell_size``.

    Attributes
    ----------
    cell_size : float
    cells_per_axis : int
        ``ceil(1 / cell_size)``; coordinates equal to 1.0 fall in the last cell.
    coords : ndarray, shape (N, d)
        Integer cell coordinate of every agent.
    cells : ndarray, shape (n_cells, d)
        Occupied cell coordinates in lexicographic order.
    order : ndarray, shape (N,)
        Agent ids grouped by cell; ascending id inside each cell.
    cell_start : ndarray, shape (n_cells + 1,)
        ``order[cell_start[c]:cell_start[c + 1]]`` are the occupants of cell c.
    agent_cell : ndarray, shape (N,)
        Index into ``cells`` of each agent's cell.
    """

    def __init__(self, positions: np.ndarray, cell_size: float):
        if not cell_size > 0:
            raise ValueError(f"cell_size must be positive, got {cell_size}")
        positions = np.ascontiguousarray(positions, dtype=np.float64)
        n, d = positions.shape
        self.positions = positions
        self.cell_size = float(cell_size)
        self.cells_per_axis = max(1, math.ceil(1.0 / self.cell_size))
        n_l = self.cells_per_axis
        coords = np.floor(positions / self.cell_size).astype(np.int64)
        np.clip(coords, 0, n_l - 1, out=coords)
        self.coords = coords

        if n_l**d < 2**62:
            key = np.zeros(n, dtype=np.int64)
            for j in range(d):
                key = key * n_l + coords[:, j]
            order = np.argsort(key, kind="stable")
            sk = key[order]
            first = np.ones(n, dtype=bool)
            first[1:] = sk[1:] != sk[:-1]
        else:
            order = np.lexsort(coords.T[::-1])
            sc = coords[order]
            first = np.ones(n, dtype=bool)
            first[1:] = np.any(sc[1:] != sc[:-1], axis=1)
        starts = np.flatnonzero(first)
        self.order = order.astype(np.int64)
        self.cells = coords[order[starts]]
        self.cell_start = np.append(starts, n).astype(np.int64)
        agent_cell = np.empty(n, dtype=np.int64)
        agent_cell[order] = np.cumsum(first) - 1
        self.agent_cell = agent_cell
        self._adjacency = None

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def dim(self) -> int:
        return self.cells.shape[1]

    def adjacency(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR Moore adjacency (self included) between occupied cells."""
        if self._adjacency is None:
            self._adjacency = _kernels.build_adjacency(self.cells, self.cells_per_axis)
        return self._adjacency

    def occupancy(self) -> dict[tuple, list[int]]:
        """Cell coordinate to the ascending list of agent ids inside it."""
        return {
            tuple(int(v) for v in self.cells[c]): self.order[self.cell_start[c] : self.cell_start[c + 1]].tolist()
            for c in range(self.n_cells)
        }

    def cell_counts(self) -> np.ndarray:
        return np.diff(self.cell_start)

    def cell_of(self, agent: int) -> tuple:
        return tuple(int(v) for v in self.coords[agent])

    def candidates(self, agent: int) -> np.ndarray:
        """Ids in the agent's cell and all Moore-adjacent cells, ascending."""
        adj_start, adj_idx = self.adjacency()
        c = self.agent_cell[agent]
        parts = [
            self.order[self.cell_start[b] : self.cell_start[b + 1]]
            for b in adj_idx[adj_start[c] : adj_start[c + 1]]
        ]
        return np.sort(np.concatenate(parts))

    def core_cells(self, m: int) -> set[tuple]:
        """Coordinates of cells holding more than ``m`` agents."""
        if m < 1:
            raise ValueError("m must be >= 1")
        idx = np.flatnonzero(self.cell_counts() > m)
        return {tuple(int(v) for v in self.cells[c]) for c in idx}

    def ball_counts(self, radius, closed: bool = False, cap: int | None = None, active=None) -> np.ndarray:
        """Agents (self included) within ``radius`` of each agent.

        ``radius`` is a scalar or one value per agent and must not exceed the
        cell size. With ``cap`` the count saturates there; inactive agents
        report 0.
        """
        n = self.positions.shape[0]
        radii = np.broadcast_to(np.asarray(radius, dtype=np.float64), (n,))
        self._check_radius(radii.max(initial=0.0))
        radii = np.ascontiguousarray(radii)
        if active is None:
            active = np.ones(n, dtype=bool)
        if cap is None:
            cap = n
        adj_start, adj_idx = self.adjacency()
        return _kernels.ball_counts(
            self.positions, self.order, self.cell_start, adj_start, adj_idx,
            radii, bool(closed), int(cap), np.asarray(active, dtype=bool),
        )

    def neighbor_lists(self, radius: float, include, counts, closed: bool = False):
        """CSR ``(indptr, indices)`` of neighbours (self excluded) for included agents.

        ``counts`` are full self-inclusive ball counts for the same radius.
        """
        self._check_radius(radius)
        include = np.asarray(include, dtype=bool)
        per = np.where(include, counts - 1, 0)
        indptr = np.zeros(per.shape[0] + 1, dtype=np.int64)
        np.cumsum(per, out=indptr[1:])
        adj_start, adj_idx = self.adjacency()
        indices = _kernels.fill_neighbors(
            self.positions, self.order, self.cell_start, adj_start, adj_idx,
            float(radius), bool(closed), include, indptr,
        )
        return indptr, indices

    def components_within(self, radius: float) -> np.ndarray:
        """Canonical root (smallest member id) per agent for the graph ``|x_i - x_k| < radius``."""
        self._check_radius(radius)
        adj_start, adj_idx = self.adjacency()
        return _kernels.union_within(self.positions, self.order, self.cell_start, adj_start, adj_idx, float(radius))

    def _check_radius(self, radius):
        if radius > self.cell_size:
            raise ValueError(f"radius {radius} exceeds cell size {self.cell_size}")


def build_lattice(ensemble: Ensemble | np.ndarray, cell_size: float) -> CellLattice:
    if not 0 < cell_size <= 1:
        raise ValueError(f"cell_size must be in (0, 1], got {cell_size}")
    positions = ensemble.positions if isinstance(ensemble, Ensemble) else ensemble
    return CellLattice(positions, cell_size)


def candidates(lattice: CellLattice, agent: int) -> np.ndarray:
    return lattice.candidates(agent)


def core_cells(lattice: CellLattice, m: int) -> set[tuple]:
    return lattice.core_cells(m)
