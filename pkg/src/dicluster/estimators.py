"""scikit-learn style wrappers around the point and image pipelines."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from . import _kernels
from .core import RunParams, delta_heuristic, m_from_eta, scale_to_unit_cube
from .dbscan import DbscanParams, dbscan
from .extract import nearest_cluster
from .io import RasterImage
from .pipelines import run_clustering, segment_image


def _resolve_params(n, d, delta, m, eta, epsilon, epsilon_ratio, n_max) -> RunParams:
    if delta is None:
        delta = min(1.0, delta_heuristic(n, d))
    if m is not None and eta is not None:
        raise ValueError("give either m or eta, not both")
    if m is None:
        m = m_from_eta(eta, n, delta) if eta is not None else 1
    if epsilon is None:
        epsilon = delta / epsilon_ratio
    return RunParams(delta=float(delta), m=m, epsilon=float(epsilon), n_max=n_max, eta=eta)


class DIClustering(ClusterMixin, BaseEstimator):
    """Density-induced consensus clustering.

    Parameters
    ----------
    delta : float, optional
        Interaction radius in the scaled unit cube. Defaults to the cube edge
        holding one point on average.
    m : int, optional
        Density threshold; an agent moves only with more than ``m`` agents
        (itself included) inside its open ``delta``-ball.
    eta : float, optional
        Relative density used to derive ``m`` instead of giving it.
    epsilon : float, optional
        Extraction cell size; ``delta / epsilon_ratio`` when omitted.
    epsilon_ratio : float
    n_max : int
        Number of Euler steps.
    absorb_outliers : bool
        Hand noise points to the nearest cluster instead of labelling -1.
    n_jobs : int, optional
        Kernel threads; None keeps the current setting.

    Attributes
    ----------
    labels_ : ndarray of shape (n_samples,)
    n_clusters_ : int
    cluster_centers_ : ndarray of shape (n_clusters, n_features)
        Cluster values mapped back to input units.
    final_positions_ : ndarray
        Terminal agent positions in the unit cube.
    params_ : RunParams
    scaler_ : AffineMap
    """

    def __init__(self, delta=None, m=None, eta=None, epsilon=None, epsilon_ratio=2.0, n_max=10,
                 absorb_outliers=False, n_jobs=None):
        self.delta = delta
        self.m = m
        self.eta = eta
        self.epsilon = epsilon
        self.epsilon_ratio = epsilon_ratio
        self.n_max = n_max
        self.absorb_outliers = absorb_outliers
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        X = validate_data(self, X, dtype=np.float64)
        n, d = X.shape
        self.params_ = _resolve_params(n, d, self.delta, self.m, self.eta, self.epsilon,
                                       self.epsilon_ratio, self.n_max)
        if self.n_jobs is not None:
            _kernels.set_threads(self.n_jobs)
        ensemble, self.scaler_ = scale_to_unit_cube(X)
        result = run_clustering(ensemble, self.params_, self.absorb_outliers)
        self.result_ = result
        self.labels_ = result.labels.copy()
        self.n_clusters_ = result.cluster_count
        self.final_positions_ = result.final_positions
        self.cluster_values_ = result.cluster_values
        self.cluster_centers_ = self.scaler_.inverse(result.cluster_values) if result.cluster_count else result.cluster_values
        self.summaries_ = result.summaries
        return self

    def predict(self, X):
        """Nearest cluster value for new points (in input units)."""
        check_is_fitted(self, "labels_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        if self.n_clusters_ == 0:
            return np.full(X.shape[0], -1, dtype=np.int64)
        return nearest_cluster(self.scaler_.apply(X), self.cluster_values_)


class DBSCANBaseline(ClusterMixin, BaseEstimator):
    """Lattice DBSCAN on min-max scaled data, for comparison runs."""

    def __init__(self, eps=0.05, min_pts=2):
        self.eps = eps
        self.min_pts = min_pts

    def fit(self, X, y=None):
        X = validate_data(self, X, dtype=np.float64)
        ensemble, _ = scale_to_unit_cube(X)
        lab = dbscan(ensemble, DbscanParams(self.eps, self.min_pts))
        self.labels_ = lab.labels
        self.n_clusters_ = lab.cluster_count
        return self


class ImageSegmenter(TransformerMixin, BaseEstimator):
    """Colour image segmentation; ``transform`` returns the segmented image.

    Accepts an H x W x 3 uint8 array or a :class:`RasterImage` and returns
    the same kind.
    """

    def __init__(self, delta=0.15, m=None, eta=5.0, epsilon=None, epsilon_ratio=2.0, n_max=10, sigma=1.0,
                 absorb_outliers=True):
        self.delta = delta
        self.m = m
        self.eta = eta
        self.epsilon = epsilon
        self.epsilon_ratio = epsilon_ratio
        self.n_max = n_max
        self.sigma = sigma
        self.absorb_outliers = absorb_outliers

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        image = X if isinstance(X, RasterImage) else RasterImage(np.asarray(X))
        eta = None if self.m is not None else self.eta
        params = _resolve_params(image.width * image.height, 5, self.delta, self.m, eta, self.epsilon,
                                 self.epsilon_ratio, self.n_max)
        out, result = segment_image(image, params, sigma=self.sigma, absorb_outliers=self.absorb_outliers)
        self.params_ = params
        self.result_ = result
        self.n_clusters_ = result.cluster_count
        return out if isinstance(X, RasterImage) else out.pixels
