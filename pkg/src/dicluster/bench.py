"""Runtime scaling harness on uniform data."""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import Ensemble, RunParams
from .dbscan import DbscanParams, dbscan
from .pipelines import run_clustering


class ComplexityWarning(UserWarning):
    """Cell count too large for the linear-time regime."""


def lattice_bound(delta: float, d: int) -> float:
    """``K log K`` with ``K = delta**-d``, the core-cell cost bound."""
    k = delta ** (-d)
    return k * math.log(k)


def satisfies_bound(delta: float, d: int, n: int) -> bool:
    return lattice_bound(delta, d) <= n


def smallest_linear_delta(n: int, d: int) -> float:
    """Smallest ``delta`` with ``K log K <= n`` for ``K = delta**-d``.

    Solved by the fixed-point iteration ``K = n / log K``.
    """
    if n < 3:
        return 1.0
    k = float(n)
    for _ in range(200):
        nxt = n / math.log(k)
        if abs(nxt - k) <= 1e-12 * k:
            break
        k = nxt
    delta = k ** (-1.0 / d)
    # nudge up so rounding can't leave us just past the bound
    while not satisfies_bound(delta, d, n):
        delta *= 1 + 1e-12
    return min(1.0, delta)


def fit_exponent(sizes, seconds) -> float:
    """Least squares slope of log time against log size."""
    return float(np.polyfit(np.log(np.asarray(sizes, float)), np.log(np.asarray(seconds, float)), 1)[0])


@dataclass
class BenchResult:
    rows: list = field(default_factory=list)  # (n, delta, di_ms, dbscan_ms)
    di_exponent: float = float("nan")
    dbscan_exponent: float = float("nan")

    def to_csv(self) -> str:
        lines = ["N,delta,di_ms,dbscan_ms"]
        lines += [f"{n},{delta:.6g},{di:.3f},{db:.3f}" for n, delta, di, db in self.rows]
        return "\n".join(lines) + "\n"


def _warm_up(d: int) -> None:
    # compile every kernel on a tiny input so timings exclude the JIT
    pts = np.random.default_rng(0).random((64, d))
    run_clustering(Ensemble(pts), RunParams(delta=0.3, m=1, n_max=1), absorb_outliers=True)
    dbscan(pts, DbscanParams(0.3, 2))


def run_bench(base_n: int = 250_000, d: int = 2, m: int = 10, n_max: int = 10, seed: int = 0,
              delta: float | None = None, ladder=(1, 2, 4), with_dbscan: bool = True) -> BenchResult:
    """Time DI (evolve and extract) and DBSCAN at ``base_n`` times each ladder rung.

    Without an explicit ``delta`` each size uses the smallest value that keeps
    the lattice in the linear regime. A given ``delta`` outside that regime
    raises a :class:`ComplexityWarning` but still runs.
    """
    _warm_up(d)
    rng = np.random.default_rng(seed)
    out = BenchResult()
    for factor in ladder:
        n = int(base_n * factor)
        dl = smallest_linear_delta(n, d) if delta is None else float(delta)
        if not satisfies_bound(dl, d, n):
            warnings.warn(f"delta={dl:g} at N={n}: K log K = {lattice_bound(dl, d):.4g} exceeds N", ComplexityWarning,
                          stacklevel=2)
        params = RunParams(delta=dl, m=m, n_max=n_max)
        pts = rng.random((n, d))
        t0 = time.perf_counter()
        run_clustering(Ensemble(pts), params, absorb_outliers=True)
        di_ms = (time.perf_counter() - t0) * 1e3
        db_ms = float("nan")
        if with_dbscan:
            t0 = time.perf_counter()
            dbscan(pts, DbscanParams(params.epsilon, m + 1))
            db_ms = (time.perf_counter() - t0) * 1e3
        out.rows.append((n, dl, di_ms, db_ms))
    if len(out.rows) >= 2:
        ns = [r[0] for r in out.rows]
        out.di_exponent = fit_exponent(ns, [r[2] for r in out.rows])
        if with_dbscan:
            out.dbscan_exponent = fit_exponent(ns, [r[3] for r in out.rows])
    return out
