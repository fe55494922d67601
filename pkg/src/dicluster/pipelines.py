"""End-to-end flows for point sets and colour images."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .core import AffineMap, Ensemble, RunParams, scale_to_unit_cube
from .dynamics import StepObserver, evolve
from .extract import ExtractionResult, assign_values_and_outliers, identify_clusters
from .io import RasterImage, encode_ppm, read_points_csv

SCATTER_SIZE = 512


def run_clustering(ensemble: Ensemble, params: RunParams, absorb_outliers: bool,
                   observer: Optional[StepObserver] = None) -> ExtractionResult:
    """Evolve, extract on the epsilon-lattice, then attach values."""
    t0 = time.perf_counter()
    evolve(ensemble, params, observer)
    t1 = time.perf_counter()
    labeling = identify_clusters(ensemble.positions, params)
    t2 = time.perf_counter()
    result = assign_values_and_outliers(labeling, ensemble.positions, params, absorb_outliers=absorb_outliers)
    t3 = time.perf_counter()
    result.final_positions = ensemble.positions.copy()
    result.stage_seconds = {"evolve": t1 - t0, "identify": t2 - t1, "assign": t3 - t2}
    return result


# -- point sets ---------------------------------------------------------------


@dataclass
class PointClustering:
    result: ExtractionResult
    ensemble: Ensemble
    scaling: AffineMap

    @property
    def labels(self) -> np.ndarray:
        return self.result.labels


def cluster_points(points, params: RunParams, absorb_outliers: bool = False,
                   observer: Optional[StepObserver] = None) -> PointClustering:
    """Cluster a point set given as an array, a CSV path or a text stream.

    Labels follow input row order; noise keeps the outlier label unless
    ``absorb_outliers`` is set.
    """
    if not isinstance(points, np.ndarray):
        points = read_points_csv(points)
    t0 = time.perf_counter()
    ensemble, amap = scale_to_unit_cube(points)
    scale_s = time.perf_counter() - t0
    result = run_clustering(ensemble, params, absorb_outliers, observer)
    result.stage_seconds = {"scale": scale_s, **result.stage_seconds}
    return PointClustering(result, ensemble, amap)


# -- images -------------------------------------------------------------------


@dataclass
class ImageFeatureSpace:
    """Pixel (row, col) to agent id is ``row * width + col``.

    Features are ``(x, y, r, g, b)``: column and row scaled by the image
    extent, colour mapped by ``(c - color_low) / color_span`` (fixed 0 and
    255 unless per-channel min-max scaling was asked for).
    """

    width: int
    height: int
    color_low: np.ndarray = field(default_factory=lambda: np.zeros(3))
    color_span: np.ndarray = field(default_factory=lambda: np.full(3, 255.0))

    @property
    def count(self) -> int:
        return self.width * self.height

    def agent(self, row: int, col: int) -> int:
        return row * self.width + col

    def pixel(self, agent: int) -> tuple[int, int]:
        return divmod(agent, self.width)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalised 1-D Gaussian truncated at radius ``ceil(3 sigma)``."""
    if sigma <= 0:
        return np.ones(1)
    radius = math.ceil(3 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-0.5 * (x / sigma) ** 2)
    return w / w.sum()


def blur_array(channels: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur of an H x W x C float array, edges clamped."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    out = np.asarray(channels, dtype=np.float64)
    if sigma == 0:
        return out.copy()
    k = gaussian_kernel(sigma)
    r = k.size // 2
    for axis in (0, 1):
        n = out.shape[axis]
        idx = np.clip(np.arange(-r, n + r), 0, n - 1)
        padded = np.take(out, idx, axis=axis)
        acc = np.zeros_like(out)
        for t, w in enumerate(k):
            sl = [slice(None)] * 3
            sl[axis] = slice(t, t + n)
            acc += w * padded[tuple(sl)]
        out = acc
    return out


def gaussian_blur(image: RasterImage, sigma: float) -> RasterImage:
    """Blur each channel and requantise with round-half-up."""
    if sigma == 0:
        return RasterImage(image.pixels.copy())
    blurred = blur_array(image.pixels, sigma)
    return RasterImage(np.clip(np.floor(blurred + 0.5), 0, 255).astype(np.uint8))


def image_to_features(image: RasterImage, color_scaling: str = "fixed") -> tuple[Ensemble, ImageFeatureSpace]:
    """Embed pixels in the 5-D unit cube.

    ``color_scaling="minmax"`` stretches each channel to its own range; a
    flat channel then maps to 0.5.
    """
    h, w = image.height, image.width
    rows, cols = np.divmod(np.arange(h * w), w)
    feats = np.empty((h * w, 5))
    feats[:, 0] = cols / (w - 1) if w > 1 else 0.5
    feats[:, 1] = rows / (h - 1) if h > 1 else 0.5
    rgb = image.pixels.reshape(-1, 3).astype(np.float64)
    if color_scaling == "fixed":
        low, span = np.zeros(3), np.full(3, 255.0)
        feats[:, 2:] = rgb / 255.0
    elif color_scaling == "minmax":
        low = rgb.min(axis=0)
        span = rgb.max(axis=0) - low
        flat = span == 0
        feats[:, 2:] = np.where(flat, 0.5, (rgb - low) / np.where(flat, 1.0, span))
        low = np.where(flat, low - 0.5, low)
        span = np.where(flat, 1.0, span)
    else:
        raise ValueError(f"unknown color_scaling {color_scaling!r}")
    return Ensemble(feats, copy=False), ImageFeatureSpace(w, h, low, span)


def colors_to_bytes(values: np.ndarray, low=0.0, span=255.0) -> np.ndarray:
    """Map normalised colour values back to 8 bits, rounding half up."""
    return np.clip(np.floor(np.asarray(values) * span + low + 0.5), 0, 255).astype(np.uint8)


def render_segmentation(result: ExtractionResult, space: ImageFeatureSpace) -> RasterImage:
    """Paint each pixel with its cluster's mean colour.

    Pixels left without a cluster (no cluster at all) keep black.
    """
    if result.cluster_count:
        palette = colors_to_bytes(result.cluster_values[:, 2:5], space.color_low, space.color_span)
    else:
        palette = np.zeros((0, 3), np.uint8)
    out = np.zeros((space.count, 3), dtype=np.uint8)
    labels = result.labels
    ok = labels >= 0
    out[ok] = palette[labels[ok]]
    return RasterImage(out.reshape(space.height, space.width, 3))


def segment_image(image: RasterImage, params: RunParams, sigma: float = 1.0, absorb_outliers: bool = True,
                  observer: Optional[StepObserver] = None,
                  color_scaling: str = "fixed") -> tuple[RasterImage, ExtractionResult]:
    """Blur, embed in the 5-D feature cube, cluster and render."""
    t0 = time.perf_counter()
    blurred = gaussian_blur(image, sigma)
    t1 = time.perf_counter()
    ensemble, space = image_to_features(blurred, color_scaling)
    result = run_clustering(ensemble, params, absorb_outliers, observer)
    t2 = time.perf_counter()
    rendered = render_segmentation(result, space)
    t3 = time.perf_counter()
    result.stage_seconds = {"blur": t1 - t0, **result.stage_seconds, "render": t3 - t2}
    result.feature_space = space
    return rendered, result


# -- diagnostics --------------------------------------------------------------


class SnapshotRecorder:
    """Step observer that keeps a copy of every state, starting with step 0."""

    def __init__(self, initial: np.ndarray):
        self.snapshots: list[tuple[int, np.ndarray]] = [(0, np.array(initial, copy=True))]

    def __call__(self, step: int, positions: np.ndarray) -> None:
        self.snapshots.append((step, np.array(positions, copy=True)))


def scatter_raster(positions: np.ndarray, axes: tuple[int, int] | None = None, size: int = SCATTER_SIZE) -> RasterImage:
    """Orthographic scatter of two coordinates on a black canvas.

    Five-dimensional image features default to the (r, g) pair and each dot
    takes the agent's own colour; otherwise the first two axes in white.
    """
    pos = np.asarray(positions)
    d = pos.shape[1]
    if axes is None:
        axes = (2, 3) if d >= 5 else (0, min(1, d - 1))
    a, b = axes
    canvas = np.zeros((size, size, 3), dtype=np.uint8)
    col = np.clip(np.floor(pos[:, a] * (size - 1) + 0.5).astype(np.int64), 0, size - 1)
    row = size - 1 - np.clip(np.floor(pos[:, b] * (size - 1) + 0.5).astype(np.int64), 0, size - 1)
    color = colors_to_bytes(pos[:, 2:5]) if d >= 5 else np.full((pos.shape[0], 3), 255, np.uint8)
    canvas[row, col] = color
    return RasterImage(canvas)


def emit_diagnostics(snapshots, out_dir, axes: tuple[int, int] | None = None) -> list[Path]:
    """Write ``snapshot_<n>.csv`` and ``scatter_<n>.ppm`` for every recorded step."""
    if isinstance(snapshots, SnapshotRecorder):
        snapshots = snapshots.snapshots
    out = Path(out_dir)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for step, pos in snapshots:
            d = pos.shape[1]
            csv_path = out / f"snapshot_{step}.csv"
            header = "id," + ",".join(f"x{j + 1}" for j in range(d))
            table = np.column_stack([np.arange(pos.shape[0]), pos])
            fmt = ["%d"] + ["%.17g"] * d
            np.savetxt(csv_path, table, delimiter=",", header=header, comments="", fmt=fmt)
            ppm_path = out / f"scatter_{step}.ppm"
            ppm_path.write_bytes(encode_ppm(scatter_raster(pos, axes)))
            written += [csv_path, ppm_path]
    except OSError as exc:
        raise OSError(f"writing diagnostics to {out}: {exc}") from exc
    return written
