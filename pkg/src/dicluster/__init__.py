"""Density-induced consensus clustering on cell lattices."""

__version__ = "0.1.0"

from .core import (
    OUTLIER,
    AffineMap,
    ClusterSummary,
    Ensemble,
    Labeling,
    RunParams,
    ValidationError,
    delta_heuristic,
    m_from_eta,
    scale_to_unit_cube,
)
from .dbscan import DbscanParams, dbscan, di_zero_iterations_vs_dbscan
from .dynamics import NeighborTable, compute_neighbors, euler_step, evolve, step
from .estimators import DBSCANBaseline, DIClustering, ImageSegmenter
from .extract import ExtractionResult, assign_values_and_outliers, identify_clusters
from .io import RasterFormatError, RasterImage, read_image, read_points_csv, write_image, write_labels_csv
from .lattice import CellLattice, build_lattice
from .packing import (
    CalibrationError,
    calibrate_n_max,
    check_condition_4,
    hull_distance,
    hulls_separated,
    is_r_densely_packed,
    r_threshold_simplified,
)
from .pipelines import cluster_points, emit_diagnostics, gaussian_blur, image_to_features, segment_image

__all__ = [
    "OUTLIER", "AffineMap", "ClusterSummary", "Ensemble", "Labeling", "RunParams", "ValidationError",
    "delta_heuristic", "m_from_eta", "scale_to_unit_cube",
    "DbscanParams", "dbscan", "di_zero_iterations_vs_dbscan",
    "NeighborTable", "compute_neighbors", "euler_step", "evolve", "step",
    "DBSCANBaseline", "DIClustering", "ImageSegmenter",
    "ExtractionResult", "assign_values_and_outliers", "identify_clusters",
    "RasterFormatError", "RasterImage", "read_image", "read_points_csv", "write_image", "write_labels_csv",
    "CellLattice", "build_lattice",
    "CalibrationError", "calibrate_n_max", "check_condition_4", "hull_distance", "hulls_separated",
    "is_r_densely_packed", "r_threshold_simplified",
    "cluster_points", "emit_diagnostics", "gaussian_blur", "image_to_features", "segment_image",
]
