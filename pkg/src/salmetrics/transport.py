"""Exact solver for the balanced transportation problem.

Primal network simplex on the complete bipartite supply/demand graph
(the MODI / u-v method): a least-cost initial spanning tree, block-search
pricing, and a switch to Bland's rule if a run of degenerate pivots suggests
cycling.
"""

from __future__ import annotations

import numpy as np
from numba import njit


class TransportError(RuntimeError):
    pass


@njit(cache=True)
def _initial_tree(supply, demand, cost, bi, bj, bf):
    m, n = cost.shape
    rs = supply.copy()
    rd = demand.copy()
    row_done = np.zeros(m, dtype=np.bool_)
    col_done = np.zeros(n, dtype=np.bool_)
    rows_left = m
    cols_left = n
    k = 0
    order = np.argsort(cost.ravel(), kind="mergesort")
    for idx in order:
        i = idx // n
        j = idx - i * n
        if row_done[i] or col_done[j]:
            continue
        amt = min(rs[i], rd[j])
        bi[k] = i
        bj[k] = j
        bf[k] = amt
        k += 1
        rs[i] -= amt
        rd[j] -= amt
        # every allocation closes exactly one line, the last closes both,
        # giving m + n - 1 basic cells that form a spanning tree
        if rows_left == 1 and cols_left == 1:
            break
        if rows_left == 1:
            close_row = False
        elif cols_left == 1:
            close_row = True
        else:
            close_row = rs[i] <= rd[j]
        if close_row:
            row_done[i] = True
            rows_left -= 1
            rs[i] = 0.0
        else:
            col_done[j] = True
            cols_left -= 1
            rd[j] = 0.0
    return k


@njit(cache=True)
def _tree(m, n, bi, bj, cost, u, v, parent, pedge, depth, adj_off, adj_edge, stack):
    nn = m + n
    nb = bi.shape[0]
    deg = np.zeros(nn + 1, dtype=np.int64)
    for e in range(nb):
        deg[bi[e] + 1] += 1
        deg[m + bj[e] + 1] += 1
    for a in range(nn):
        deg[a + 1] += deg[a]
    for a in range(nn + 1):
        adj_off[a] = deg[a]
    fill = adj_off[:nn].copy()
    for e in range(nb):
        a = bi[e]
        b = m + bj[e]
        adj_edge[fill[a]] = e
        fill[a] += 1
        adj_edge[fill[b]] = e
        fill[b] += 1

    for a in range(nn):
        parent[a] = -2
    # node 0 (first row) is the root with u = 0
    parent[0] = -1
    pedge[0] = -1
    depth[0] = 0
    u[0] = 0.0
    top = 0
    stack[top] = 0
    top += 1
    seen = 1
    while top > 0:
        top -= 1
        a = stack[top]
        for p in range(adj_off[a], adj_off[a + 1]):
            e = adj_edge[p]
            i = bi[e]
            jn = m + bj[e]
            b = jn if a == i else i
            if parent[b] != -2:
                continue
            parent[b] = a
            pedge[b] = e
            depth[b] = depth[a] + 1
            if b >= m:
                v[b - m] = cost[i, bj[e]] - u[i]
            else:
                u[b] = cost[i, bj[e]] - v[bj[e]]
            stack[top] = b
            top += 1
            seen += 1
    return seen


@njit(cache=True)
def _simplex(supply, demand, cost, max_iter, tol):
    m, n = cost.shape
    nb = m + n - 1
    bi = np.empty(nb, dtype=np.int64)
    bj = np.empty(nb, dtype=np.int64)
    bf = np.empty(nb, dtype=np.float64)
    k = _initial_tree(supply, demand, cost, bi, bj, bf)
    if k != nb:
        return bi, bj, bf, -1, 0

    nn = m + n
    u = np.zeros(m)
    v = np.zeros(n)
    parent = np.empty(nn, dtype=np.int64)
    pedge = np.empty(nn, dtype=np.int64)
    depth = np.empty(nn, dtype=np.int64)
    adj_off = np.empty(nn + 1, dtype=np.int64)
    adj_edge = np.empty(2 * nb, dtype=np.int64)
    stack = np.empty(nn, dtype=np.int64)
    path_j = np.empty(nn, dtype=np.int64)
    path_i = np.empty(nn, dtype=np.int64)

    total = m * n
    block = max(16, int(np.sqrt(total)))
    start = 0
    bland = False
    degenerate_run = 0
    it = 0
    while it < max_iter:
        it += 1
        seen = _tree(m, n, bi, bj, cost, u, v, parent, pedge, depth, adj_off, adj_edge, stack)
        if seen != nn:
            return bi, bj, bf, -2, it

        # pricing
        enter = -1
        best = -tol
        if bland:
            for idx in range(total):
                i = idx // n
                j = idx - i * n
                if cost[i, j] - u[i] - v[j] < -tol:
                    enter = idx
                    break
        else:
            scanned = 0
            idx = start
            while scanned < total:
                i = idx // n
                j = idx - i * n
                r = cost[i, j] - u[i] - v[j]
                if r < best:
                    best = r
                    enter = idx
                scanned += 1
                idx += 1
                if idx == total:
                    idx = 0
                if scanned % block == 0 and enter >= 0:
                    break
            start = idx
        if enter < 0:
            return bi, bj, bf, 0, it

        ei = enter // n
        ej = enter - ei * n
        # tree path between row node ei and column node m + ej
        a = ei
        b = m + ej
        li = 0
        lj = 0
        while depth[a] > depth[b]:
            path_i[li] = pedge[a]
            li += 1
            a = parent[a]
        while depth[b] > depth[a]:
            path_j[lj] = pedge[b]
            lj += 1
            b = parent[b]
        while a != b:
            path_i[li] = pedge[a]
            li += 1
            a = parent[a]
            path_j[lj] = pedge[b]
            lj += 1
            b = parent[b]

        # edges at even offsets from either end of the path lose flow
        theta = np.inf
        leave = -1
        leave_key = total
        for s in range(li):
            if s % 2 == 0:
                e = path_i[s]
                f = bf[e]
                key = bi[e] * n + bj[e]
                if f < theta or (f == theta and bland and key < leave_key):
                    theta = f
                    leave = e
                    leave_key = key
        for s in range(lj):
            if s % 2 == 0:
                e = path_j[s]
                f = bf[e]
                key = bi[e] * n + bj[e]
                if f < theta or (f == theta and bland and key < leave_key):
                    theta = f
                    leave = e
                    leave_key = key

        for s in range(li):
            e = path_i[s]
            if s % 2 == 0:
                bf[e] -= theta
            else:
                bf[e] += theta
        for s in range(lj):
            e = path_j[s]
            if s % 2 == 0:
                bf[e] -= theta
            else:
                bf[e] += theta
        bi[leave] = ei
        bj[leave] = ej
        bf[leave] = theta

        if theta <= 0.0:
            degenerate_run += 1
            if degenerate_run > 2 * nn:
                bland = True
        else:
            degenerate_run = 0
    return bi, bj, bf, 1, it


def solve_transport(supply, demand, cost, tol: float | None = None, max_iter: int | None = None):
    """Minimise ``sum(flow * cost)`` subject to row sums = supply, column sums = demand.

    ``supply`` and ``demand`` must be nonnegative with equal totals (up to
    rounding; the last basic cell absorbs the residue). Returns
    ``(rows, cols, amounts)`` for the basic cells with positive flow.
    """
    supply = np.ascontiguousarray(supply, dtype=np.float64)
    demand = np.ascontiguousarray(demand, dtype=np.float64)
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    m, n = cost.shape
    if supply.shape != (m,) or demand.shape != (n,):
        raise ValueError("supply/demand do not match the cost matrix")
    if np.any(supply < 0) or np.any(demand < 0):
        raise ValueError("negative mass")
    if tol is None:
        tol = 1e-12 * max(1.0, float(np.abs(cost).max(initial=0.0)))
    if max_iter is None:
        max_iter = 50 * (m + n) * (m + n) + 1000
    bi, bj, bf, status, iters = _simplex(supply, demand, cost, max_iter, tol)
    if status == -1 or status == -2:
        raise TransportError("infeasible flow: basis is not a spanning tree")
    if status == 1:
        raise TransportError(f"no convergence after {iters} pivots")
    keep = bf > 0
    return bi[keep], bj[keep], bf[keep]
