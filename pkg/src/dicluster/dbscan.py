"""Reference DBSCAN on the cell lattice, and the zero-step comparison."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.metrics import adjusted_rand_score, rand_score

from . import _kernels
from .core import OUTLIER, Ensemble, Labeling, RunParams, ValidationError
from .extract import identify_clusters
from .lattice import CellLattice


@dataclass(frozen=True)
class DbscanParams:
    eps: float
    min_pts: int

    def __post_init__(self):
        if not self.eps > 0:
            raise ValidationError("eps must be positive")
        if int(self.min_pts) != self.min_pts or self.min_pts < 1:
            raise ValidationError("min_pts must be an integer >= 1")


def dbscan(ensemble: Ensemble | np.ndarray, params: DbscanParams) -> Labeling:
    """Classical DBSCAN with closed, self-inclusive eps-neighbourhoods.

    Clusters are grown from core points in ascending id order; a border
    point joins the first cluster that reaches it.
    """
    pos = ensemble.positions if isinstance(ensemble, Ensemble) else np.asarray(ensemble, dtype=np.float64)
    if pos.size and (pos.min() < 0 or pos.max() > 1):
        raise ValidationError("dbscan expects points scaled to the unit cube")
    lattice = CellLattice(pos, params.eps)
    counts = lattice.ball_counts(params.eps, closed=True)
    is_core = counts >= params.min_pts
    indptr, indices = lattice.neighbor_lists(params.eps, is_core, counts, closed=True)
    labels = _kernels.dbscan_grow(pos.shape[0], indptr, indices, is_core)
    return Labeling(labels, int(labels.max(initial=-1)) + 1)


def _noise_as_singletons(labels: np.ndarray) -> np.ndarray:
    out = labels.copy()
    noise = np.flatnonzero(out == OUTLIER)
    out[noise] = out.max(initial=-1) + 1 + np.arange(noise.size)
    return out


@dataclass
class ZeroStepComparison:
    di_clusters: int
    dbscan_clusters: int
    di_noise: int
    dbscan_noise: int
    rand_index: float
    adjusted_rand_index: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def di_zero_iterations_vs_dbscan(ensemble: Ensemble, params: RunParams, min_pts: int | None = None) -> ZeroStepComparison:
    """Compare lattice extraction without dynamics against DBSCAN.

    DBSCAN runs with ``eps = epsilon`` and ``min_pts = m + 1`` unless given.
    Noise points count as singletons in the pair-counting scores. The two
    methods are related, not identical, so nothing is asserted here.
    """
    di = identify_clusters(ensemble.positions, params)
    db = dbscan(ensemble, DbscanParams(params.epsilon, params.m + 1 if min_pts is None else min_pts))
    a = _noise_as_singletons(di.labels)
    b = _noise_as_singletons(db.labels)
    return ZeroStepComparison(
        di_clusters=di.cluster_count,
        dbscan_clusters=db.cluster_count,
        di_noise=int(np.sum(di.labels == OUTLIER)),
        dbscan_noise=int(np.sum(db.labels == OUTLIER)),
        rand_index=float(rand_score(a, b)),
        adjusted_rand_index=float(adjusted_rand_score(a, b)),
    )
