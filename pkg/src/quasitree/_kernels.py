"""Compiled inner loops."""
import numpy as np
from numba import njit


@njit(cache=True)
def four_point_max(d):
    """Max over i<j<k<l of half the gap between the two largest pair sums."""
    n = d.shape[0]
    best = 0.0
    bi, bj, bk, bl = 0, 0, 0, 0
    for i in range(n):
        for j in range(i + 1, n):
            dij = d[i, j]
            for k in range(j + 1, n):
                dik = d[i, k]
                djk = d[j, k]
                for l in range(k + 1, n):
                    s1 = dij + d[k, l]
                    s2 = dik + d[j, l]
                    s3 = d[i, l] + djk
                    if s1 >= s2:
                        hi, lo = s1, s2
                    else:
                        hi, lo = s2, s1
                    if s3 > hi:
                        lo = hi
                        hi = s3
                    elif s3 > lo:
                        lo = s3
                    gap = 0.5 * (hi - lo)
                    if gap > best:
                        best = gap
                        bi, bj, bk, bl = i, j, k, l
    return best, (bi, bj, bk, bl)


@njit(cache=True)
def euler_meet(parent, height, order_children_ptr, order_children, root, query):
    """Meet heights for all pairs of ``query`` nodes of a rooted tree.

    Children are given in CSR form.  The meet of a and b is the minimum
    height over the Euler tour between their first occurrences.
    """
    n = parent.shape[0]
    tour = np.empty(2 * n, dtype=np.int64)
    first = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n + 1, dtype=np.int64)
    cursor = np.zeros(n, dtype=np.int64)
    top = 0
    stack[0] = root
    t = 0
    first[root] = 0
    tour[0] = root
    t = 1
    while top >= 0:
        v = stack[top]
        c = cursor[v]
        lo = order_children_ptr[v]
        hi = order_children_ptr[v + 1]
        if lo + c < hi:
            w = order_children[lo + c]
            cursor[v] = c + 1
            top += 1
            stack[top] = w
            first[w] = t
            tour[t] = w
            t += 1
        else:
            top -= 1
            if top >= 0:
                tour[t] = stack[top]
                t += 1
    th = np.empty(t)
    for s in range(t):
        th[s] = height[tour[s]]
    m = query.shape[0]
    out = np.empty((m, m))
    pos = np.empty(m, dtype=np.int64)
    for a in range(m):
        pos[a] = first[query[a]]
    order = np.argsort(pos, kind="mergesort")
    for ia in range(m):
        a = order[ia]
        s = pos[a]
        mn = th[s]
        out[a, a] = height[query[a]]
        for ib in range(ia + 1, m):
            b = order[ib]
            while s < pos[b]:
                s += 1
                if th[s] < mn:
                    mn = th[s]
            out[a, b] = mn
            out[b, a] = mn
    return out


@njit(cache=True)
def dfs_intervals(pred, root):
    """Pre-order entry/exit times of a parent-pointer tree (children by index)."""
    n = pred.shape[0]
    count = np.zeros(n + 1, dtype=np.int64)
    for v in range(n):
        if pred[v] >= 0:
            count[pred[v] + 1] += 1
    ptr = np.cumsum(count)
    fill = ptr[:-1].copy()
    kids = np.empty(max(n - 1, 1), dtype=np.int64)
    for v in range(n):
        p = pred[v]
        if p >= 0:
            kids[fill[p]] = v
            fill[p] += 1
    tin = np.empty(n, dtype=np.int64)
    tout = np.empty(n, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    cursor = np.zeros(n, dtype=np.int64)
    top = 0
    stack[0] = root
    t = 0
    tin[root] = t
    t += 1
    while top >= 0:
        v = stack[top]
        c = cursor[v]
        if ptr[v] + c < ptr[v + 1]:
            w = kids[ptr[v] + c]
            cursor[v] = c + 1
            top += 1
            stack[top] = w
            tin[w] = t
            t += 1
        else:
            tout[v] = t
            top -= 1
    return tin, tout
