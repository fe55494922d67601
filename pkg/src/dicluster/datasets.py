"""Seeded synthetic point sets and images.

Each point generator returns ``(points, truth)`` where ``truth`` holds the
generating component of every point (``-1`` for background noise).
"""

from __future__ import annotations

import numpy as np

from .io import RasterImage


def two_blobs(n: int = 400, seed: int = 0, spread: float = 0.03):
    """Two round blobs centred at (0, 0) and (1, 1)."""
    rng = np.random.default_rng(seed)
    half = n // 2
    a = rng.normal(0.0, spread, size=(half, 2))
    b = rng.normal(0.0, spread, size=(n - half, 2)) + [1.0, 1.0]
    truth = np.repeat([0, 1], [half, n - half])
    return np.vstack([a, b]), truth


def two_moons(n: int = 400, seed: int = 0, noise: float = 0.05):
    rng = np.random.default_rng(seed)
    half = n // 2
    t1 = rng.uniform(0, np.pi, half)
    t2 = rng.uniform(0, np.pi, n - half)
    upper = np.column_stack([np.cos(t1), np.sin(t1)])
    lower = np.column_stack([1 - np.cos(t2), 0.5 - np.sin(t2)])
    pts = np.vstack([upper, lower]) + rng.normal(0, noise, size=(n, 2))
    return pts, np.repeat([0, 1], [half, n - half])


def ring_blob(n_ring: int = 600, n_blob: int = 1500, seed: int = 0, radius: float = 1.0,
              width: float = 0.03, spread: float = 0.05):
    """A dense blob at the centre of a thin ring.

    The blob's high local density sets the global step normaliser, which
    keeps the sparser ring from breaking into arcs.
    """
    rng = np.random.default_rng(seed)
    t = rng.uniform(0, 2 * np.pi, n_ring)
    rr = radius + rng.normal(0, width, n_ring)
    ring = np.column_stack([rr * np.cos(t), rr * np.sin(t)])
    blob = rng.normal(0, spread, size=(n_blob, 2))
    return np.vstack([ring, blob]), np.repeat([0, 1], [n_ring, n_blob])


def grid_with_noise(per_blob: int = 80, side: int = 3, n_noise: int = 60, seed: int = 0, spread: float = 0.03):
    """``side x side`` blobs on a grid plus uniform background noise."""
    rng = np.random.default_rng(seed)
    pts, truth = [], []
    for k in range(side * side):
        cy, cx = divmod(k, side)
        pts.append(rng.normal(0, spread, size=(per_blob, 2)) + [cx, cy])
        truth.append(np.full(per_blob, k))
    pts.append(rng.uniform(-0.5, side - 0.5, size=(n_noise, 2)))
    truth.append(np.full(n_noise, -1))
    return np.vstack(pts), np.concatenate(truth)


def uniform(n: int, d: int = 2, seed: int = 0):
    rng = np.random.default_rng(seed)
    return rng.random((n, d)), np.zeros(n, dtype=np.int64)


GENERATORS = {
    "blobs": two_blobs,
    "moons": two_moons,
    "ring_blob": ring_blob,
    "grid_noise": grid_with_noise,
}


def cluttered_image(width: int = 160, height: int = 107, seed: int = 0) -> RasterImage:
    """A smooth sky over heavily textured ground with a textured red object.

    Built so that, before any dynamics, only the sky is locally flat enough
    to form dense cells while the textured parts are not.
    """
    rng = np.random.default_rng(seed)
    img = np.zeros((height, width, 3))
    horizon = height // 2
    yy, xx = np.mgrid[0:height, 0:width]
    sky = yy < horizon
    img[sky] = [70, 120, 200]
    img[sky, 2] += 10 * (yy[sky] / max(1, horizon))
    ground = ~sky
    base = np.array([60, 140, 50])
    img[ground] = base + rng.uniform(-90, 90, size=(int(ground.sum()), 3))
    obj = ground & ((xx - 0.7 * width) ** 2 + (yy - 0.75 * height) ** 2 < (0.15 * height) ** 2)
    img[obj] = np.array([200, 50, 40]) + rng.uniform(-90, 90, size=(int(obj.sum()), 3))
    return RasterImage(np.clip(np.rint(img), 0, 255).astype(np.uint8))


def two_tone_image(width: int = 32, height: int = 24,
                   left=(30, 60, 200), right=(220, 200, 40)) -> RasterImage:
    img = np.empty((height, width, 3), dtype=np.uint8)
    img[:, : width // 2] = left
    img[:, width // 2 :] = right
    return RasterImage(img)
