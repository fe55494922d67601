"""Shared domain types, run configuration and parameter heuristics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

#: Label carried by agents that belong to no cluster.
OUTLIER = -1


class ValidationError(ValueError):
    """Raised when input data or parameters violate a precondition."""


class Ensemble:
    """N agents in the unit cube, plus a frozen snapshot of their start.

    ``positions`` is the only mutable state; ``initial_positions`` is a
    read-only copy taken at construction and used for retroactive labeling.
    """

    def __init__(self, positions, copy: bool = True):
        # copy=None avoids a copy only when the input is already C-ordered float64
        pos = np.array(positions, dtype=np.float64, copy=True if copy else None, order="C")
        if pos.ndim != 2 or pos.shape[0] < 1 or pos.shape[1] < 1:
            raise ValidationError(f"positions must be a non-empty N x d array, got shape {pos.shape}")
        if not np.all(np.isfinite(pos)):
            row = int(np.flatnonzero(~np.isfinite(pos).all(axis=1))[0])
            raise ValidationError(f"non-finite coordinate in row {row}")
        if pos.min() < 0.0 or pos.max() > 1.0:
            raise ValidationError("positions must lie in the unit cube [0, 1]^d")
        self.positions = pos
        init = pos.copy()
        init.setflags(write=False)
        self.initial_positions = init

    @property
    def count(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def __repr__(self):
        return f"Ensemble(count={self.count}, dim={self.dim})"


@dataclass(frozen=True)
class AffineMap:
    """Per-coordinate map ``scaled = (raw - offset) * scale``.

    Degenerate coordinates (zero range) have ``scale == 0`` and are sent to
    0.5; their inverse returns ``offset``.
    """

    offset: np.ndarray
    scale: np.ndarray

    def apply(self, raw) -> np.ndarray:
        raw = np.asarray(raw, dtype=np.float64)
        out = (raw - self.offset) * self.scale
        degenerate = self.scale == 0
        if np.any(degenerate):
            out[..., degenerate] = 0.5
        return out

    def inverse(self, scaled) -> np.ndarray:
        scaled = np.asarray(scaled, dtype=np.float64)
        safe = np.where(self.scale == 0, 1.0, self.scale)
        out = scaled / safe + self.offset
        degenerate = self.scale == 0
        if np.any(degenerate):
            out[..., degenerate] = self.offset[degenerate]
        return out


def scale_to_unit_cube(raw) -> tuple[Ensemble, AffineMap]:
    """Min-max scale each coordinate of ``raw`` into [0, 1].

    Returns the ensemble and the affine map, so results can be reported in
    the original units.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 2 or raw.shape[0] < 1 or raw.shape[1] < 1:
        raise ValidationError(f"expected a non-empty N x d array, got shape {raw.shape}")
    finite = np.isfinite(raw).all(axis=1)
    if not finite.all():
        row = int(np.flatnonzero(~finite)[0])
        raise ValidationError(f"non-finite value in row {row}")
    lo = raw.min(axis=0)
    hi = raw.max(axis=0)
    span = hi - lo
    scale = np.zeros_like(span)
    nz = span > 0
    scale[nz] = 1.0 / span[nz]
    amap = AffineMap(offset=lo, scale=scale)
    scaled = amap.apply(raw)
    # rounding can leave the maximum a hair above 1
    np.clip(scaled, 0.0, 1.0, out=scaled)
    return Ensemble(scaled, copy=False), amap


def m_from_eta(eta: float, n: int, delta: float) -> int:
    """Density threshold ``m`` that is ``eta`` times the mean density.

    The 5-ball volume ``(8/15) pi^2 delta^5`` times ``eta * n``, floored and
    clamped to at least 1.
    """
    if not eta > 0 or n < 1 or not 0 < delta <= 1:
        raise ValidationError(f"m_from_eta needs eta > 0, n >= 1, 0 < delta <= 1 (got {eta}, {n}, {delta})")
    return max(1, math.floor(8.0 / 15.0 * math.pi**2 * eta * n * delta**5))


def delta_heuristic(n: int, d: int) -> float:
    """Edge length of a d-cube holding, on average, one of ``n`` points."""
    if n < 1 or d < 1:
        raise ValidationError("delta_heuristic needs n >= 1 and d >= 1")
    return (1.0 / n) ** (1.0 / d)


@dataclass(frozen=True)
class RunParams:
    """Full configuration of one clustering run.

    The coupling strength never appears: the discrete scheme fixes the
    product of step size and coupling to ``1/K_n``.
    """

    delta: float
    m: int
    epsilon: Optional[float] = None
    n_max: int = 10
    eta: Optional[float] = None

    def __post_init__(self):
        if not (isinstance(self.delta, (int, float)) and 0 < self.delta <= 1):
            raise ValidationError(f"delta must be in (0, 1], got {self.delta!r}")
        if int(self.m) != self.m or self.m < 1:
            raise ValidationError(f"m must be an integer >= 1, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))
        if self.epsilon is None:
            object.__setattr__(self, "epsilon", self.delta / 2)
        if not 0 < self.epsilon <= self.delta:
            raise ValidationError(f"epsilon must be in (0, delta], got {self.epsilon!r}")
        if int(self.n_max) != self.n_max or self.n_max < 0:
            raise ValidationError(f"n_max must be a non-negative integer, got {self.n_max!r}")
        object.__setattr__(self, "n_max", int(self.n_max))
        if self.eta is not None and not self.eta > 0:
            raise ValidationError(f"eta must be positive, got {self.eta!r}")

    @classmethod
    def from_eta(cls, eta: float, n: int, delta: float, **kwargs) -> "RunParams":
        return cls(delta=delta, m=m_from_eta(eta, n, delta), eta=eta, **kwargs)

    def replace(self, **changes) -> "RunParams":
        values = dict(delta=self.delta, m=self.m, epsilon=self.epsilon, n_max=self.n_max, eta=self.eta)
        if "delta" in changes and "epsilon" not in changes:
            values["epsilon"] = None
        values.update(changes)
        return RunParams(**values)


@dataclass
class Labeling:
    labels: np.ndarray
    cluster_count: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)

    @property
    def outlier_mask(self) -> np.ndarray:
        return self.labels == OUTLIER

    def members(self, cluster_id: int) -> np.ndarray:
        return np.flatnonzero(self.labels == cluster_id)

    def sizes(self) -> np.ndarray:
        valid = self.labels[self.labels >= 0]
        return np.bincount(valid, minlength=self.cluster_count)


@dataclass
class ClusterSummary:
    id: int
    size: int
    centroid: np.ndarray
    r_threshold: float
    packed_at: Optional[float] = field(default=None)

    def as_dict(self) -> dict:
        return {
            "id": int(self.id),
            "size": int(self.size),
            "centroid": [float(v) for v in self.centroid],
            "r_threshold": float(self.r_threshold),
            "packed_at": None if self.packed_at is None else float(self.packed_at),
        }
