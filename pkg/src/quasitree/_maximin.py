"""Maximin (widest-path) machinery shared by the bottleneck and tree modules.

Everything here rests on one fact: in a weighted graph, the best achievable
minimum edge weight between two vertices is the smallest weight on their
path in a maximum spanning tree, so merging components in decreasing
weight order (Kruskal) assigns every pair its maximin value at the moment
the pair is first joined.
"""
from __future__ import annotations

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from ._kernels import euler_meet


def sorted_desc(eu, ev, ew):
    order = np.lexsort((ev, eu, -ew))
    return eu[order], ev[order], ew[order]


def maximin_fill(n: int, eu, ev, ew, diag) -> np.ndarray:
    """All-pairs maximin values for edge-weighted graph on ``n`` vertices.

    Pairs never joined get ``-inf``; the diagonal is taken from ``diag``.
    """
    out = np.full((n, n), -np.inf)
    ds = DisjointSet(range(n))
    for u, v, w in zip(*sorted_desc(eu, ev, ew)):
        if ds.connected(u, v):
            continue
        a = np.fromiter(ds.subset(u), dtype=np.int64)
        b = np.fromiter(ds.subset(v), dtype=np.int64)
        out[np.ix_(a, b)] = w
        out[np.ix_(b, a)] = w
        ds.merge(u, v)
    np.fill_diagonal(out, diag)
    return out


def first_masked_merge(n: int, eu, ev, ew, mask: np.ndarray):
    """Largest maximin value over pairs (x, y) with ``mask[x, y]``.

    Returns ``(value, x, y)`` with the lexicographically smallest masked
    pair among those joined by the winning merge, or None when no masked
    off-diagonal pair exists.
    """
    ds = DisjointSet(range(n))
    for u, v, w in zip(*sorted_desc(eu, ev, ew)):
        if ds.connected(u, v):
            continue
        a = np.fromiter(ds.subset(u), dtype=np.int64)
        b = np.fromiter(ds.subset(v), dtype=np.int64)
        ds.merge(u, v)
        hits = []
        sub = mask[np.ix_(a, b)]
        if sub.any():
            i, j = np.nonzero(sub)
            hits.extend(zip(a[i].tolist(), b[j].tolist()))
        sub = mask[np.ix_(b, a)]
        if sub.any():
            i, j = np.nonzero(sub)
            hits.extend(zip(b[i].tolist(), a[j].tolist()))
        if hits:
            x, y = min(hits)
            return float(w), x, y
    return None


def max_spanning_tree_dense(weights: np.ndarray):
    """Prim's algorithm on a dense symmetric weight matrix (maximizing).

    Ties prefer the smaller vertex index so the tree is deterministic.
    """
    n = weights.shape[0]
    if n <= 1:
        z = np.zeros(0, dtype=np.int64)
        return z, z, np.zeros(0)
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = weights[0].astype(float).copy()
    link = np.zeros(n, dtype=np.int64)
    best[0] = -np.inf
    eu, ev, ew = [], [], []
    for _ in range(n - 1):
        cand = np.where(in_tree, -np.inf, best)
        v = int(np.argmax(cand))
        eu.append(int(link[v]))
        ev.append(v)
        ew.append(weights[link[v], v])
        in_tree[v] = True
        better = (~in_tree) & (weights[v] > best)
        best[better] = weights[v][better]
        link[better] = v
    return np.array(eu, dtype=np.int64), np.array(ev, dtype=np.int64), np.array(ew, dtype=float)


def maximin_dense(weights: np.ndarray, diag: np.ndarray) -> np.ndarray:
    """Maximin closure of a complete weighted graph, via its maximum spanning tree."""
    eu, ev, ew = max_spanning_tree_dense(weights)
    return maximin_fill(weights.shape[0], eu, ev, ew, diag)


def meet_heights(parent: np.ndarray, height: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Heights of pairwise meets (lowest common ancestors) in a rooted tree.

    ``parent[root] == -1``; children are visited in ascending index order.
    """
    parent = np.asarray(parent, dtype=np.int64)
    n = len(parent)
    roots = np.nonzero(parent < 0)[0]
    if len(roots) != 1:
        raise ValueError("tree must have exactly one root")
    kids = np.nonzero(parent >= 0)[0]
    order = np.lexsort((kids, parent[kids]))
    kids = kids[order]
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(ptr, parent[kids] + 1, 1)
    ptr = np.cumsum(ptr)
    return euler_meet(
        parent,
        np.asarray(height, dtype=float),
        ptr,
        kids.astype(np.int64),
        int(roots[0]),
        np.asarray(query, dtype=np.int64),
    )
