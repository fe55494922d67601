"""Stopping criteria: dense packing, rigidity thresholds and hull separation.

A cluster A is r-densely packed when the union of open r/2-balls around its
members is connected and every open r-ball around a member holds more than
m agents. Two open r/2-balls overlap iff their centres are closer than r,
so connectivity is that of the graph ``|x_i - x_j| < r`` on A.

The convex hull of a union of delta/2-balls is the hull of the centres
grown by delta/2, so two such hulls are disjoint iff the point hulls are
more than delta apart.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels
from .core import Ensemble, RunParams
from .dynamics import NeighborTable, compute_neighbors, euler_step
from .lattice import CellLattice, build_lattice

SEPARATION_TOL = 1e-9


class CalibrationError(RuntimeError):
    """The step cap was reached before the stopping criterion held."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


@dataclass
class PackingReport:
    cluster_id: int
    is_packed: bool
    r_used: float
    ball_count_min: int
    connected: bool


@dataclass
class SeparationReport:
    pairwise_min_hull_distance: float
    separated: bool
    closest_pair: Optional[tuple[int, int]] = None


def _as_members(members) -> np.ndarray:
    ids = np.unique(np.asarray(list(members) if not isinstance(members, np.ndarray) else members, dtype=np.int64))
    if ids.size == 0:
        raise ValueError("member set must be nonempty")
    return ids


def _connected(points: np.ndarray, r: float) -> bool:
    if points.shape[0] == 1:
        return True
    lat = CellLattice(points, r)
    roots = lat.components_within(r)
    return bool(np.all(roots == roots[0]))


def is_r_densely_packed(members, ensemble: Ensemble, r: float, m: int, cluster_id: int = 0,
                        saturate: bool = False) -> PackingReport:
    """Evaluate both packing conditions for one cluster.

    Ball counts range over the whole ensemble. With ``saturate`` the counts
    stop at ``m + 1``, which is enough to decide the criterion.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    ids = _as_members(members)
    pos = ensemble.positions
    connected = _connected(pos[ids], r)
    lat = CellLattice(pos, r)
    active = np.zeros(pos.shape[0], dtype=bool)
    active[ids] = True
    counts = lat.ball_counts(r, cap=m + 1 if saturate else None, active=active)
    cmin = int(counts[ids].min())
    return PackingReport(cluster_id=cluster_id, is_packed=connected and cmin > m, r_used=float(r),
                         ball_count_min=cmin, connected=connected)


def r_threshold_simplified(cluster_size: int, delta: float, m: int) -> float:
    """Packing radius ``delta * m / (6 * size)`` used in practice."""
    if cluster_size < 1:
        raise ValueError("cluster_size must be >= 1")
    return delta * m / (6.0 * cluster_size)


def rigidity_factor(m: int, cluster_size: int) -> float:
    """``Z = exp(2m / (3 size^3))``."""
    return math.exp(2.0 * m / (3.0 * cluster_size**3))


def check_condition_4(r: float, delta: float, m: int, cluster_size: int) -> bool:
    """Whether ``(r/delta) Z^(r/delta) <= (m / (6 size)) Z``.

    Evaluated in log form so that Z may be astronomically large.
    """
    if not 0 < r <= delta:
        raise ValueError("need 0 < r <= delta")
    if cluster_size < 1:
        raise ValueError("cluster_size must be >= 1")
    q = r / delta
    log_z = 2.0 * m / (3.0 * cluster_size**3)
    return math.log(q) + q * log_z <= math.log(m / (6.0 * cluster_size)) + log_z


def _affine_minimizer(S: np.ndarray) -> np.ndarray:
    # minimise |sum a_k s_k| subject to sum a_k = 1
    if S.shape[0] == 1:
        return np.ones(1)
    D = (S[1:] - S[0]).T
    beta, *_ = np.linalg.lstsq(D, -S[0], rcond=None)
    return np.concatenate(([1.0 - beta.sum()], beta))


def hull_distance(P, Q, tol: float = 1e-9, max_iter: int = 10000) -> float:
    """Euclidean distance between ``conv(P)`` and ``conv(Q)``.

    Wolfe's minimum-norm-point method on the Minkowski difference
    ``conv(P) - conv(Q)``, driven by its support function, so the difference
    set is never enumerated.
    """
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    if P.ndim != 2 or Q.ndim != 2 or P.shape[0] == 0 or Q.shape[0] == 0:
        raise ValueError("point sets must be nonempty 2-D arrays")

    def support(x):
        return P[np.argmin(P @ x)] - Q[np.argmax(Q @ x)]

    x = P[0] - Q[0]
    S = x[None, :].copy()
    lam = np.ones(1)
    for _ in range(max_iter):
        nx = float(np.linalg.norm(x))
        if nx <= tol:
            return nx
        v = support(x)
        gap = float(x @ x - x @ v)
        if gap <= tol * nx:
            return nx
        if any(np.array_equal(v, s) for s in S):
            return nx
        S = np.vstack([S, v])
        lam = np.append(lam, 0.0)
        fresh = True
        while True:
            alpha = _affine_minimizer(S)
            if np.all(alpha > 1e-14):
                lam = alpha
                break
            mask = alpha <= 1e-14
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(mask, lam / (lam - alpha), np.inf)
            theta = min(1.0, float(np.min(ratios)))
            lam = theta * alpha + (1.0 - theta) * lam
            keep = lam > 1e-14
            if fresh and not keep[-1]:
                # rounding prevents any progress along the new vertex
                return nx
            fresh = False
            S, lam = S[keep], lam[keep]
            lam = lam / lam.sum()
            if S.shape[0] == 1:
                break
        x = lam @ S
    raise RuntimeError(f"hull distance did not converge in {max_iter} iterations")


def hulls_separated(clusters: Sequence, ensemble: Ensemble, delta: float) -> SeparationReport:
    """Whether the delta/2-grown hulls of all clusters are pairwise disjoint.

    Pairs are visited in order of their bounding-box gap, a lower bound of
    the hull distance, so most pairs are never solved exactly.
    """
    groups = [_as_members(c) for c in clusters]
    seen = np.concatenate(groups) if groups else np.empty(0, dtype=np.int64)
    if np.unique(seen).size != seen.size:
        raise ValueError("clusters must be disjoint")
    if len(groups) < 2:
        return SeparationReport(math.inf, True)
    pos = ensemble.positions
    pts = [pos[g] for g in groups]
    lo = np.array([p.min(axis=0) for p in pts])
    hi = np.array([p.max(axis=0) for p in pts])
    pairs = []
    for a, b in itertools.combinations(range(len(groups)), 2):
        gap = np.maximum(0.0, np.maximum(lo[a] - hi[b], lo[b] - hi[a]))
        pairs.append((float(np.linalg.norm(gap)), a, b))
    pairs.sort()
    best = math.inf
    best_pair = None
    for bound, a, b in pairs:
        if bound >= best:
            break
        dist = hull_distance(pts[a], pts[b])
        if dist < best:
            best, best_pair = dist, (a, b)
    return SeparationReport(best, best > delta + SEPARATION_TOL, best_pair)


def components_from_table(table: NeighborTable) -> list[np.ndarray]:
    """Connected components of the symmetrised interaction graph.

    Components are sorted by smallest member; an agent without edges comes
    back as a singleton, which is exactly how outliers are recognised.
    """
    n = len(table)
    roots = _kernels.union_edges(n, table.indptr, table.indices)
    order = np.argsort(roots, kind="stable")
    sr = roots[order]
    cuts = np.flatnonzero(sr[1:] != sr[:-1]) + 1
    return np.split(order, cuts)


def current_components(ensemble: Ensemble, params: RunParams) -> list[np.ndarray]:
    lattice = build_lattice(ensemble, params.delta)
    return components_from_table(compute_neighbors(ensemble, lattice, params))


@dataclass
class StepDiagnostics:
    step: int
    n_components: int
    min_hull_distance: float
    separated: bool
    n_packed: int
    all_packed: bool
    reports: list = field(default_factory=list, repr=False)

    def as_dict(self) -> dict:
        return {
            "step": self.step,
            "n_components": self.n_components,
            "min_hull_distance": None if math.isinf(self.min_hull_distance) else self.min_hull_distance,
            "separated": self.separated,
            "n_packed": self.n_packed,
            "all_packed": self.all_packed,
        }


def packing_status(ensemble: Ensemble, components: list[np.ndarray], params: RunParams) -> tuple[list[PackingReport], SeparationReport]:
    """Packing reports (at each component's simplified radius) and separation."""
    pos = ensemble.positions
    n = pos.shape[0]
    reports = []
    if components:
        radii = np.zeros(n)
        active = np.zeros(n, dtype=bool)
        for comp in components:
            radii[comp] = r_threshold_simplified(comp.size, params.delta, params.m)
            active[comp] = True
        cell = min(1.0, float(radii.max()))
        counts = CellLattice(pos, cell).ball_counts(radii, cap=params.m + 1, active=active)
        for cid, comp in enumerate(components):
            r = float(radii[comp[0]])
            connected = _connected(pos[comp], r)
            cmin = int(counts[comp].min())
            reports.append(PackingReport(cid, connected and cmin > params.m, r, cmin, connected))
    return reports, hulls_separated(components, ensemble, params.delta)


def calibrate_n_max(ensemble: Ensemble, params: RunParams, cap: int = 10000,
                    on_step: Optional[Callable[[StepDiagnostics], None]] = None) -> int:
    """Number of steps until every cluster is packed and all hulls separated.

    Runs on a copy of ``ensemble``. After each step the multi-member
    components of the interaction graph are the clusters; singleton outliers
    are ignored. With no multi-member component the answer is the current
    step. Raises :class:`CalibrationError` once ``cap`` steps are exhausted.
    """
    work = Ensemble(ensemble.positions)
    history = []
    for n in range(cap + 1):
        table = compute_neighbors(work, build_lattice(work, params.delta), params)
        comps = [c for c in components_from_table(table) if c.size > 1]
        reports, sep = packing_status(work, comps, params)
        n_packed = sum(r.is_packed for r in reports)
        diag = StepDiagnostics(n, len(comps), sep.pairwise_min_hull_distance, sep.separated,
                               n_packed, n_packed == len(reports), reports)
        history.append(diag)
        if on_step is not None:
            on_step(diag)
        if diag.separated and diag.all_packed:
            return n
        if n < cap:
            euler_step(work, table)
    raise CalibrationError(f"stopping criterion not met within {cap} steps", history[-5:])
