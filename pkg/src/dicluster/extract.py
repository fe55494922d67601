"""Cluster identification on the epsilon-lattice and outlier assignment."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
from sklearn.neighbors import KDTree

from . import _kernels
from .core import OUTLIER, ClusterSummary, Labeling, RunParams
from .lattice import CellLattice
from .packing import r_threshold_simplified


@dataclass
class ExtractionResult:
    """Final clustering of one run.

    ``labeling`` is per agent id, so it applies unchanged to the initial
    data. ``raw_labeling`` is the lattice labeling before outlier merging;
    ``cluster_values`` are centroids of final positions over that raw
    labeling. ``degenerate`` flags that no cluster was found.
    """

    labeling: Labeling
    summaries: list[ClusterSummary]
    outlier_ids: np.ndarray
    cluster_values: np.ndarray
    raw_labeling: Optional[Labeling] = None
    degenerate: bool = False
    stage_seconds: dict = field(default_factory=dict)
    final_positions: Optional[np.ndarray] = None
    feature_space: Any = None

    @property
    def labels(self) -> np.ndarray:
        return self.labeling.labels

    @property
    def cluster_count(self) -> int:
        return self.labeling.cluster_count


def identify_clusters(final_positions: np.ndarray, params: RunParams) -> Labeling:
    """Label agents by connected groups of core cells of the epsilon-lattice.

    A core cell holds more than ``m`` agents; core cells sharing a face,
    edge or corner are merged. Cluster ids follow the smallest member id.
    Agents of the remaining cells are outliers.
    """
    pos = np.asarray(final_positions, dtype=np.float64)
    lattice = CellLattice(pos, params.epsilon)
    counts = lattice.cell_counts()
    core = counts > params.m
    labels = np.full(pos.shape[0], OUTLIER, dtype=np.int64)
    if not core.any():
        return Labeling(labels, 0)
    adj_start, adj_idx = lattice.adjacency()
    roots = _kernels.union_cells(adj_start, adj_idx, core)
    agent_root = roots[lattice.agent_cell]
    in_core = core[lattice.agent_cell]
    ids = np.flatnonzero(in_core)
    # ids are ascending, so first occurrence order is smallest-member order
    uniq, first = np.unique(agent_root[ids], return_index=True)
    rank = np.empty(uniq.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(uniq.size)
    labels[ids] = rank[np.searchsorted(uniq, agent_root[ids])]
    return Labeling(labels, int(uniq.size))


def _centroids(labels: np.ndarray, k: int, pos: np.ndarray) -> np.ndarray:
    sizes = np.bincount(labels[labels >= 0], minlength=k).astype(np.float64)
    out = np.zeros((k, pos.shape[1]))
    mask = labels >= 0
    for j in range(pos.shape[1]):
        out[:, j] = np.bincount(labels[mask], weights=pos[mask, j], minlength=k)
    return out / sizes[:, None]


def nearest_cluster(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Index of the nearest centroid per point; ties go to the lower index.

    Small problems are solved by brute force, larger ones with a k-d tree.
    """
    points = np.asarray(points, dtype=np.float64)
    k = centroids.shape[0]
    if points.shape[0] * k <= 2**20:
        d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        return np.argmin(d2, axis=1).astype(np.int64)
    tree = KDTree(centroids)
    dist, idx = tree.query(points, k=min(k, 4))
    # among the returned candidates, exact ties resolve to the lowest index
    idx = np.where(dist == dist[:, :1], idx, np.iinfo(np.int64).max)
    return idx.min(axis=1).astype(np.int64)


def assign_values_and_outliers(labeling: Labeling, final_positions: np.ndarray,
                               params: RunParams | None = None, absorb_outliers: bool = True) -> ExtractionResult:
    """Attach cluster values and, optionally, hand outliers to the nearest cluster.

    A cluster's value is the mean final position of its members. An outlier
    joins the cluster whose value is nearest to the outlier's final position
    (full feature vector). Without clusters everything stays an outlier.
    Summaries describe the clusters before merging.
    """
    final = np.asarray(final_positions, dtype=np.float64)
    labels = labeling.labels.copy()
    k = labeling.cluster_count
    values = _centroids(labels, k, final) if k else np.zeros((0, final.shape[1]))
    outliers = np.flatnonzero(labels == OUTLIER)
    if absorb_outliers and k and outliers.size:
        labels[outliers] = nearest_cluster(final[outliers], values)
    merged = Labeling(labels, k)
    sizes = labeling.sizes()
    summaries = []
    for c in range(k):
        r = r_threshold_simplified(int(sizes[c]), params.delta, params.m) if params is not None else float("nan")
        summaries.append(ClusterSummary(id=c, size=int(sizes[c]), centroid=values[c].copy(), r_threshold=r))
    return ExtractionResult(
        labeling=merged,
        summaries=summaries,
        outlier_ids=outliers,
        cluster_values=values,
        raw_labeling=labeling,
        degenerate=k == 0,
    )
