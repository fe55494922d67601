"""Density-induced consensus dynamics: neighbour sets and the Euler step."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .core import Ensemble, RunParams
from .lattice import CellLattice, build_lattice

StepObserver = Callable[[int, np.ndarray], None]


@dataclass
class NeighborTable:
    """Neighbour sets of one time step in CSR form.

    ``indices[indptr[i]:indptr[i + 1]]`` lists the neighbours of agent i in
    ascending id order (self excluded). Non-core agents have empty lists.
    ``ball_count`` is the self-inclusive number of agents in the open
    delta-ball and ``k_n = max_i max(#N_i, m)``.
    """

    indptr: np.ndarray
    indices: np.ndarray
    ball_count: np.ndarray
    is_core: np.ndarray
    k_n: int

    def __len__(self):
        return self.indptr.shape[0] - 1

    def neighbors_of(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    @property
    def neighbors(self) -> list[np.ndarray]:
        return [self.neighbors_of(i) for i in range(len(self))]

    @property
    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)


def compute_neighbors(ensemble: Ensemble, lattice: CellLattice, params: RunParams) -> NeighborTable:
    """Neighbour sets for the current positions.

    Agent i is core when its open delta-ball holds more than ``m`` agents
    (itself included); a core agent's neighbours are all other agents in
    that ball.
    """
    if lattice.cell_size < params.delta:
        raise ValueError("lattice cells must be at least delta wide")
    counts = lattice.ball_counts(params.delta)
    is_core = counts > params.m
    indptr, indices = lattice.neighbor_lists(params.delta, is_core, counts)
    deg = np.diff(indptr)
    k_n = max(int(deg.max(initial=0)), params.m)
    return NeighborTable(indptr=indptr, indices=indices, ball_count=counts, is_core=is_core, k_n=k_n)


def euler_step(ensemble: Ensemble, table: NeighborTable) -> None:
    """Advance all agents one explicit Euler step with step scale ``1/K_n`` (in place)."""
    new = _kernels.euler_update(ensemble.positions, table.indptr, table.indices, table.k_n)
    ensemble.positions[...] = new


def step(ensemble: Ensemble, params: RunParams) -> NeighborTable:
    """Rebuild the delta-lattice, compute neighbours, and advance once."""
    lattice = build_lattice(ensemble, params.delta)
    table = compute_neighbors(ensemble, lattice, params)
    euler_step(ensemble, table)
    return table


def evolve(ensemble: Ensemble, params: RunParams, observer: Optional[StepObserver] = None) -> int:
    """Run ``params.n_max`` steps; ``observer(n, positions)`` sees each new state.

    The positions passed to the observer are a read-only view; copy them to
    keep a snapshot.
    """
    for n in range(params.n_max):
        step(ensemble, params)
        if observer is not None:
            view = ensemble.positions.view()
            view.setflags(write=False)
            observer(n + 1, view)
    return params.n_max
