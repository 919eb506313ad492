"""Quasi-tree certification: bottleneck constant and chain defect.

The bottleneck constant is the least radius such that every path between
the ends of a geodesic meets the closed ball of that radius around each
geodesic vertex.  The chain defect is the largest gap between the
bottleneck Gromov product and the plain one.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from ._kernels import dfs_intervals
from ._maximin import first_masked_merge
from .metric import (
    DEFAULT_TOL,
    DistanceMatrix,
    MetricGraph,
    all_pairs_distances,
    distances_from,
    four_point_delta,
    path_from_predecessors,
    shortest_path_predecessors,
)


def _vertex(g: MetricGraph, v: str) -> int:
    try:
        return g.index[v]
    except KeyError:
        raise KeyError(f"unknown vertex {v!r}") from None


def _bfs_path(g: MetricGraph, allowed: np.ndarray, s: int, t: int) -> list[int]:
    prev = {s: -1}
    queue = deque([s])
    while queue:
        u = queue.popleft()
        if u == t:
            break
        for w in g.neighbors(u)[0]:
            w = int(w)
            if allowed[w] and w not in prev:
                prev[w] = u
                queue.append(w)
    path = [t]
    while prev[path[-1]] >= 0:
        path.append(prev[path[-1]])
    return path[::-1]


def maximin_vertex_path(g: MetricGraph, weight: np.ndarray, s: int, t: int, tol: float = DEFAULT_TOL):
    """Best achievable minimum vertex weight over paths from s to t.

    Vertices are switched on in decreasing weight order until s and t share
    a component; the returned path is a fewest-hops path inside the
    switched-on set, preferring low indices.
    """
    if s == t:
        return float(weight[s]), [s]
    order = np.lexsort((np.arange(g.n), -weight))
    on = np.zeros(g.n, dtype=bool)
    ds = DisjointSet(range(g.n))
    value = None
    for v in order:
        v = int(v)
        on[v] = True
        for w in g.neighbors(v)[0]:
            if on[w]:
                ds.merge(v, int(w))
        if on[s] and on[t] and ds.connected(s, t):
            value = float(weight[v])
            break
    allowed = weight >= value - tol
    return value, _bfs_path(g, allowed, s, t)


def widest_avoidance(
    g: MetricGraph, x: str, y: str, z: str, D: DistanceMatrix | None = None
) -> tuple[float, list[str]]:
    """Max over paths x..y of the min distance from z to a path vertex."""
    xi, yi, zi = _vertex(g, x), _vertex(g, y), _vertex(g, z)
    dz = D.d[zi] if D is not None else distances_from(g, zi)
    value, path = maximin_vertex_path(g, dz, xi, yi)
    return value, [g.nodes[i] for i in path]


class BottleneckValue(NamedTuple):
    value: float
    witness: tuple[str, str, str, list[str]] | None


def bottleneck_constant(
    g: MetricGraph,
    D: DistanceMatrix | None = None,
    all_geodesics: bool = False,
    tol: float = DEFAULT_TOL,
) -> BottleneckValue:
    """Bottleneck constant over canonical geodesics (or all geodesics).

    For each centre z, pairs are joined in decreasing order of their
    widest-avoidance value around z; the first merge that joins a pair
    (x, y) whose geodesic passes through z gives the best value for z.
    With ``all_geodesics`` a vertex z counts when d(x,z) + d(z,y) = d(x,y),
    which is exactly membership in some geodesic vertex path.
    """
    if D is None:
        D = all_pairs_distances(g)
    n = g.n
    if n == 1:
        return BottleneckValue(0.0, None)
    d = D.d
    eu, ev, _ = g.edge_arrays
    if not all_geodesics:
        tin = np.empty((n, n), dtype=np.int64)
        tout = np.empty((n, n), dtype=np.int64)
        for x in range(n):
            pred = shortest_path_predecessors(g, x, d[x], tol)
            tin[x], tout[x] = dfs_intervals(pred, x)
    best = None
    for z in range(n):
        if all_geodesics:
            mask = np.abs(d[:, z, None] + d[None, z, :] - d) <= tol
        else:
            mask = (tin[:, z, None] <= tin) & (tin < tout[:, z, None])
        np.fill_diagonal(mask, False)
        w = np.minimum(d[z, eu], d[z, ev])
        hit = first_masked_merge(n, eu, ev, w, mask)
        if hit is None:
            continue
        value, x, y = hit
        key = (x, y, z)
        if best is None or value > best[0] + tol or (abs(value - best[0]) <= tol and key < best[1]):
            best = (value, key)
    if best is None:
        return BottleneckValue(0.0, None)
    value, (x, y, z) = best
    _, path = maximin_vertex_path(g, d[z], x, y, tol)
    return BottleneckValue(
        value, (g.nodes[x], g.nodes[y], g.nodes[z], [g.nodes[i] for i in path])
    )


def canonical_geodesic_contains(g: MetricGraph, D: DistanceMatrix, x: str, y: str, z: str) -> bool:
    pred = shortest_path_predecessors(g, g.index[x], D.d[g.index[x]])
    return g.index[z] in path_from_predecessors(pred, g.index[y])


class ChainDefect(NamedTuple):
    value: float
    witness: tuple[str, str, str] | None


def chain_defect(D: DistanceMatrix, basepoints: Sequence[str] | None = None) -> ChainDefect:
    """Largest (x,y)'_{x0} - (x,y)_{x0} over basepoints and pairs.

    Equivalently the least A with (x1,xn) >= min_i (x_i,x_{i+1}) - A for
    every vertex chain.  ``basepoints`` restricts the outer maximum.
    """
    from .endtree import gromov_table

    bases = list(D.nodes) if basepoints is None else list(basepoints)
    best = (0.0, None)
    for b in bases:
        table = gromov_table(D, b)
        gap = table.bgp - table.gp
        k = int(np.argmax(gap))
        i, j = divmod(k, D.n)
        if gap[i, j] > best[0]:
            best = (float(gap[i, j]), (b, D.nodes[min(i, j)], D.nodes[max(i, j)]))
    return ChainDefect(*best)


@dataclass
class BottleneckReport:
    delta_bn: float
    witness: tuple | None
    A: float
    A_witness: tuple | None
    delta_4pt: float
    delta_witness: tuple | None
    budget: float | None = None
    passed: bool = True
    all_geodesics: bool = False
    basepoints: str = "all"
    notes: list[str] = field(default_factory=list)

    @property
    def chain_bound(self) -> float:
        return self.delta_bn + 2 * self.delta_4pt

    @property
    def chain_bound_holds(self) -> bool:
        return self.A <= self.chain_bound + DEFAULT_TOL

    def to_dict(self) -> dict:
        w = self.witness
        return {
            "delta_4pt": self.delta_4pt,
            "delta_witness": list(self.delta_witness) if self.delta_witness else None,
            "bottleneck": self.delta_bn,
            "bottleneck_witness": (
                {"x": w[0], "y": w[1], "z": w[2], "path": list(w[3])} if w else None
            ),
            "chain_defect": self.A,
            "chain_defect_witness": (
                dict(zip(("x0", "x", "y"), self.A_witness)) if self.A_witness else None
            ),
            "chain_bound": self.chain_bound,
            "chain_bound_holds": self.chain_bound_holds,
            "budget": self.budget,
            "passed": self.passed,
            "all_geodesics": self.all_geodesics,
            "basepoints": self.basepoints,
            "notes": list(self.notes),
        }


def certify_quasi_tree(
    g: MetricGraph,
    budget: float | None = None,
    D: DistanceMatrix | None = None,
    all_geodesics: bool = False,
    basepoints: Sequence[str] | None = None,
    tol: float = DEFAULT_TOL,
) -> BottleneckReport:
    if D is None:
        D = all_pairs_distances(g)
    bn = bottleneck_constant(g, D, all_geodesics=all_geodesics, tol=tol)
    A = chain_defect(D, basepoints)
    hyp = four_point_delta(D)
    report = BottleneckReport(
        delta_bn=bn.value,
        witness=bn.witness,
        A=A.value,
        A_witness=A.witness,
        delta_4pt=hyp.delta,
        delta_witness=hyp.witness,
        budget=budget,
        passed=budget is None or bn.value <= budget + tol,
        all_geodesics=all_geodesics,
        basepoints="all" if basepoints is None else ",".join(basepoints),
    )
    if hyp.sampled:
        report.notes.append("four-point delta sampled (lower bound)")
    if not report.chain_bound_holds:
        report.notes.append("chain defect exceeds bottleneck + 2*delta")
    return report
