"""Compiled inner loops over the cell lattice.

Every parallel kernel iterates over occupied cells and writes only to rows
owned by the agents of that cell, so results are independent of the number
of threads.
"""

import os
import warnings

import numba
import numpy as np
from numba import njit, prange

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the bundled TBB is too old; skip the noisy probe
    numba.config.THREADING_LAYER = "workqueue"


def set_threads(n=None):
    """Set the kernel thread count; ``None`` means all available."""
    limit = numba.config.NUMBA_NUM_THREADS
    if n is None:
        n = limit
    n = int(n)
    if n < 1:
        raise ValueError("thread count must be >= 1")
    if n > limit:
        warnings.warn(f"requested {n} threads but only {limit} are available; using {limit}", stacklevel=2)
        n = limit
    numba.set_num_threads(n)
    return n


def get_threads():
    return numba.get_num_threads()


@njit(cache=True)
def _lex_cmp(cells, row, coord):
    for j in range(coord.shape[0]):
        a = cells[row, j]
        b = coord[j]
        if a < b:
            return -1
        if a > b:
            return 1
    return 0


@njit(cache=True)
def _lex_find(cells, coord):
    lo = 0
    hi = cells.shape[0] - 1
    while lo <= hi:
        mid = (lo + hi) >> 1
        c = _lex_cmp(cells, mid, coord)
        if c == 0:
            return mid
        if c < 0:
            lo = mid + 1
        else:
            hi = mid - 1
    return -1


@njit(cache=True)
def _adjacent_cells(cells, n_l, c, coord, out):
    d = cells.shape[1]
    cnt = 0
    for o in range(3**d):
        rem = o
        ok = True
        for j in range(d):
            v = cells[c, j] + rem % 3 - 1
            rem //= 3
            if v < 0 or v >= n_l:
                ok = False
                break
            coord[j] = v
        if ok:
            idx = _lex_find(cells, coord)
            if idx >= 0:
                if out.shape[0] > 0:
                    out[cnt] = idx
                cnt += 1
    return cnt


@njit(cache=True, parallel=True)
def build_adjacency(cells, n_l):
    """Moore neighbourhood (self included) of every occupied cell.

    Returns CSR arrays ``(adj_start, adj_idx)``; the neighbours of each cell
    are listed in ascending cell index.
    """
    n_cells, d = cells.shape
    counts = np.zeros(n_cells, dtype=np.int64)
    empty = np.empty(0, dtype=np.int64)
    for c in prange(n_cells):
        coord = np.empty(d, dtype=np.int64)
        counts[c] = _adjacent_cells(cells, n_l, c, coord, empty)
    adj_start = np.zeros(n_cells + 1, dtype=np.int64)
    for c in range(n_cells):
        adj_start[c + 1] = adj_start[c] + counts[c]
    adj_idx = np.empty(adj_start[n_cells], dtype=np.int64)
    for c in prange(n_cells):
        coord = np.empty(d, dtype=np.int64)
        row = adj_idx[adj_start[c] : adj_start[c + 1]]
        _adjacent_cells(cells, n_l, c, coord, row)
        row[:] = np.sort(row)
    return adj_start, adj_idx


@njit(cache=True, inline="always")
def _dist(pos, i, k):
    s = 0.0
    for j in range(pos.shape[1]):
        t = pos[i, j] - pos[k, j]
        s += t * t
    return np.sqrt(s)


@njit(cache=True, parallel=True)
def ball_counts(pos, order, cell_start, adj_start, adj_idx, radii, closed, cap, active):
    """Number of agents (self included) within ``radii[i]`` of each active agent.

    Counting saturates at ``cap``. ``closed`` selects ``<=`` instead of ``<``.
    """
    n = pos.shape[0]
    n_cells = cell_start.shape[0] - 1
    out = np.zeros(n, dtype=np.int64)
    for c in prange(n_cells):
        for a in range(cell_start[c], cell_start[c + 1]):
            i = order[a]
            if not active[i]:
                continue
            radius = radii[i]
            cnt = 0
            for q in range(adj_start[c], adj_start[c + 1]):
                b = adj_idx[q]
                for t in range(cell_start[b], cell_start[b + 1]):
                    k = order[t]
                    dk = _dist(pos, i, k)
                    if dk < radius or (closed and dk == radius):
                        cnt += 1
                        if cnt >= cap:
                            break
                if cnt >= cap:
                    break
            out[i] = cnt
    return out


@njit(cache=True, parallel=True)
def fill_neighbors(pos, order, cell_start, adj_start, adj_idx, radius, closed, include, indptr):
    """Ascending neighbour ids (self excluded) of every agent with ``include``.

    ``indptr`` must already hold the CSR offsets matching the counts. All
    agents of a cell share one candidate list, sorted once per cell.
    """
    n_cells = cell_start.shape[0] - 1
    d = pos.shape[1]
    indices = np.empty(indptr[-1], dtype=np.int64)
    for c in prange(n_cells):
        any_included = False
        for a in range(cell_start[c], cell_start[c + 1]):
            if include[order[a]]:
                any_included = True
                break
        if not any_included:
            continue
        total = 0
        for q in range(adj_start[c], adj_start[c + 1]):
            b = adj_idx[q]
            total += cell_start[b + 1] - cell_start[b]
        cand = np.empty(total, dtype=np.int64)
        w = 0
        for q in range(adj_start[c], adj_start[c + 1]):
            b = adj_idx[q]
            for t in range(cell_start[b], cell_start[b + 1]):
                cand[w] = order[t]
                w += 1
        cand.sort()
        cpos = np.empty((total, d))
        for t in range(total):
            for j in range(d):
                cpos[t, j] = pos[cand[t], j]
        for a in range(cell_start[c], cell_start[c + 1]):
            i = order[a]
            if not include[i]:
                continue
            w = indptr[i]
            for t in range(total):
                k = cand[t]
                if k == i:
                    continue
                s = 0.0
                for j in range(d):
                    u = pos[i, j] - cpos[t, j]
                    s += u * u
                dk = np.sqrt(s)
                if dk < radius or (closed and dk == radius):
                    indices[w] = k
                    w += 1
    return indices


@njit(cache=True, parallel=True)
def euler_update(pos, indptr, indices, k_n):
    """Synchronous step ``x_i + (1/K) sum_k (x_k - x_i)``.

    The result is clamped to the coordinate range spanned by the agent and
    its neighbours, which the exact value never leaves; this removes
    rounding overshoot so the bounding box cannot grow.
    """
    n, d = pos.shape
    out = pos.copy()
    k = float(k_n)
    for i in prange(n):
        lo_k = indptr[i]
        hi_k = indptr[i + 1]
        if hi_k == lo_k:
            continue
        for j in range(d):
            xi = pos[i, j]
            s = 0.0
            lo = xi
            hi = xi
            for t in range(lo_k, hi_k):
                v = pos[indices[t], j]
                s += v - xi
                if v < lo:
                    lo = v
                elif v > hi:
                    hi = v
            y = xi + s / k
            if y < lo:
                y = lo
            elif y > hi:
                y = hi
            out[i, j] = y
    return out


@njit(cache=True)
def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@njit(cache=True)
def _union(parent, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra == rb:
        return
    # the smaller id becomes the root; keeps roots canonical
    if ra < rb:
        parent[rb] = ra
    else:
        parent[ra] = rb


@njit(cache=True)
def union_within(pos, order, cell_start, adj_start, adj_idx, radius):
    """Union-find roots of the graph ``|x_i - x_k| < radius`` over lattice members."""
    n = pos.shape[0]
    parent = np.arange(n)
    remaining = n - 1
    n_cells = cell_start.shape[0] - 1
    for c in range(n_cells):
        for a in range(cell_start[c], cell_start[c + 1]):
            if remaining == 0:
                break
            i = order[a]
            for q in range(adj_start[c], adj_start[c + 1]):
                b = adj_idx[q]
                if b < c:
                    continue
                for t in range(cell_start[b], cell_start[b + 1]):
                    k = order[t]
                    if k <= i and b == c:
                        continue
                    if _find(parent, i) == _find(parent, k):
                        continue
                    if _dist(pos, i, k) < radius:
                        _union(parent, i, k)
                        remaining -= 1
    for i in range(n):
        parent[i] = _find(parent, i)
    return parent


@njit(cache=True)
def union_cells(adj_start, adj_idx, is_core_cell):
    """Union-find roots over core cells joined by Moore adjacency."""
    n_cells = is_core_cell.shape[0]
    parent = np.arange(n_cells)
    for c in range(n_cells):
        if not is_core_cell[c]:
            continue
        for q in range(adj_start[c], adj_start[c + 1]):
            b = adj_idx[q]
            if b > c and is_core_cell[b]:
                _union(parent, c, b)
    for c in range(n_cells):
        parent[c] = _find(parent, c)
    return parent


@njit(cache=True)
def union_edges(n, indptr, indices):
    """Roots of the undirected graph given by CSR adjacency lists."""
    parent = np.arange(n)
    for i in range(n):
        for t in range(indptr[i], indptr[i + 1]):
            _union(parent, i, indices[t])
    for i in range(n):
        parent[i] = _find(parent, i)
    return parent


@njit(cache=True)
def dbscan_grow(n, indptr, indices, is_core):
    """Classical region growing in ascending seed order.

    Border points take the label of the first cluster that reaches them.
    """
    labels = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    cluster = 0
    for seed in range(n):
        if labels[seed] != -1 or not is_core[seed]:
            continue
        labels[seed] = cluster
        head = 0
        tail = 0
        queue[tail] = seed
        tail += 1
        while head < tail:
            p = queue[head]
            head += 1
            for t in range(indptr[p], indptr[p + 1]):
                k = indices[t]
                if labels[k] == -1:
                    labels[k] = cluster
                    if is_core[k]:
                        queue[tail] = k
                        tail += 1
        cluster += 1
    return labels
