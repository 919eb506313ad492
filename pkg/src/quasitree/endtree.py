"""The end-approximating tree of a finite geodesic graph.

Fix a basepoint x0.  The bottleneck Gromov product (x,y)' is the best
chain value  max over vertex chains x=x1..xn=y of min_i (x_i, x_{i+1}),
always computed here as the maximin closure of the complete graph
weighted by Gromov products.  d'(x,y) = d(x0,x) + d(x0,y) - 2 (x,y)' is
a pseudometric; collapsing its zero set gives a tree metric d*, realized
below as an explicit rooted tree whose branch points sit at heights
(x,y)' and whose class nodes sit at heights d(x0,x).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from ._kernels import dfs_intervals
from ._maximin import maximin_dense, maximin_fill, max_spanning_tree_dense, meet_heights, sorted_desc
from .bottleneck import maximin_vertex_path
from .metric import (
    DEFAULT_TOL,
    DistanceMatrix,
    MetricGraph,
    all_pairs_distances,
    distances_from,
    gromov_matrix,
    shortest_path_predecessors,
)
from .reports import DistortionReport


class QuotientError(ValueError):
    """Zero-distance relation is not transitive at the given tolerance."""


class TreeConstructionError(RuntimeError):
    pass


@dataclass
class GromovTable:
    basepoint: str
    nodes: tuple[str, ...]
    gp: np.ndarray
    bgp: np.ndarray


def bottleneck_gromov_products(D: DistanceMatrix, x0: str) -> np.ndarray:
    gp = gromov_matrix(D, x0)
    return maximin_dense(gp, np.diag(gp))


def gromov_table(D: DistanceMatrix, x0: str) -> GromovTable:
    gp = gromov_matrix(D, x0)
    return GromovTable(x0, D.nodes, gp, maximin_dense(gp, np.diag(gp)))


def dprime_metric(D: DistanceMatrix, x0: str, bgp: np.ndarray | None = None) -> np.ndarray:
    if bgp is None:
        bgp = bottleneck_gromov_products(D, x0)
    row = D.d[D.idx(x0)]
    return row[:, None] + row[None, :] - 2.0 * bgp


def quotient_classes(
    dprime: np.ndarray, nodes: tuple[str, ...], tol: float = DEFAULT_TOL
) -> list[tuple[str, ...]]:
    """Classes of vertices at pseudo-distance <= tol, ordered by first member."""
    n = len(nodes)
    close = dprime <= tol
    ds = DisjointSet(range(n))
    i, j = np.nonzero(np.triu(close, 1))
    for a, b in zip(i.tolist(), j.tolist()):
        ds.merge(a, b)
    classes = sorted((sorted(s) for s in ds.subsets()), key=lambda c: c[0])
    for c in classes:
        if len(c) > 1:
            block = close[np.ix_(c, c)]
            if not block.all():
                a, b = np.argwhere(~block)[0]
                raise QuotientError(
                    f"non-transitive merge: {nodes[c[a]]!r} and {nodes[c[b]]!r} are chained "
                    f"at d' <= {tol:g} but d' = {dprime[c[a], c[b]]:.3g}"
                )
    return [tuple(nodes[k] for k in c) for c in classes]


@dataclass
class TreeNode:
    id: str
    height: float
    parent: str | None
    members: tuple[str, ...] = ()

    @property
    def is_class(self) -> bool:
        return bool(self.members)


@dataclass
class RootedRealTree:
    """A finite rooted metric tree; edge lengths are height differences."""

    nodes: dict[str, TreeNode]
    root: str
    basepoint: str | None = None
    leaf_map: dict[str, str] = field(default_factory=dict)

    @cached_property
    def class_map(self) -> dict[str, frozenset[str]]:
        return {k: frozenset(v.members) for k, v in self.nodes.items() if v.members}

    @cached_property
    def order(self) -> list[str]:
        return list(self.nodes)

    @cached_property
    def position(self) -> dict[str, int]:
        return {k: i for i, k in enumerate(self.order)}

    @cached_property
    def parent_array(self) -> np.ndarray:
        pos = self.position
        return np.array(
            [-1 if self.nodes[k].parent is None else pos[self.nodes[k].parent] for k in self.order],
            dtype=np.int64,
        )

    @cached_property
    def height_array(self) -> np.ndarray:
        return np.array([self.nodes[k].height for k in self.order], dtype=float)

    @cached_property
    def children(self) -> dict[str, list[str]]:
        kids: dict[str, list[str]] = {k: [] for k in self.nodes}
        for k, v in self.nodes.items():
            if v.parent is not None:
                kids[v.parent].append(k)
        return kids

    def height(self, node: str) -> float:
        return self.nodes[node].height

    def edges(self) -> list[tuple[str, str, float]]:
        return [
            (v.parent, k, v.height - self.nodes[v.parent].height)
            for k, v in self.nodes.items()
            if v.parent is not None
        ]

    @property
    def class_nodes(self) -> list[str]:
        return [k for k, v in self.nodes.items() if v.members]

    def meet_heights(self, ids: list[str]) -> np.ndarray:
        q = np.array([self.position[i] for i in ids], dtype=np.int64)
        return meet_heights(self.parent_array, self.height_array, q)

    def distance_matrix(self, ids: list[str]) -> np.ndarray:
        m = self.meet_heights(ids)
        h = np.array([self.nodes[i].height for i in ids])
        return h[:, None] + h[None, :] - 2.0 * m

    def distance(self, a: str, b: str) -> float:
        return float(self.distance_matrix([a, b])[0, 1])

    def vertex_distance_matrix(self, vertices: list[str]) -> np.ndarray:
        return self.distance_matrix([self.leaf_map[v] for v in vertices])

    def vertex_distance(self, x: str, y: str) -> float:
        return self.distance(self.leaf_map[x], self.leaf_map[y])

    def meet_height(self, x: str, y: str) -> float:
        return float(self.meet_heights([self.leaf_map[x], self.leaf_map[y]])[0, 1])


def _branch_namer(taken: set[str]):
    prefix = "_b"
    while any(t.startswith(prefix) for t in taken):
        prefix = "_" + prefix
    k = 0
    while True:
        yield f"{prefix}{k}"
        k += 1


def build_end_tree(D: DistanceMatrix, x0: str, tol: float = DEFAULT_TOL, verify: bool = True) -> RootedRealTree:
    """Explicit rooted tree realizing d* for basepoint ``x0``.

    Classes are merged by Kruskal on the class-level bottleneck products;
    a merge at height m reuses a cluster top already at height m (class
    node or branch node) and otherwise creates a branch node there.
    """
    b = D.idx(x0)
    table = gromov_table(D, x0)
    d0 = D.d[b]
    classes = quotient_classes(dprime_metric(D, x0, table.bgp), D.nodes, tol)
    reps = [D.idx(c[0]) for c in classes]
    for c in classes:
        hs = d0[[D.idx(v) for v in c]]
        if hs.max() - hs.min() > tol:
            raise TreeConstructionError(f"class {c!r} straddles spheres around {x0!r}")

    ids = [c[0] for c in classes]
    height = {ids[k]: float(d0[reps[k]]) for k in range(len(classes))}
    members = {ids[k]: classes[k] for k in range(len(classes))}
    parent: dict[str, str | None] = {i: None for i in ids}
    namer = _branch_namer(set(D.nodes))

    bc = table.bgp[np.ix_(reps, reps)]
    k = len(reps)
    eu, ev, ew = max_spanning_tree_dense(bc)
    ds = DisjointSet(range(k))
    top = {r: ids[r] for r in range(k)}
    for u, v, m in zip(*sorted_desc(eu, ev, ew)):
        ta, tb = top[ds[u]], top[ds[v]]
        ha, hb = height[ta], height[tb]
        if ha < m - tol or hb < m - tol:
            raise TreeConstructionError(
                f"merge height {m:.12g} above cluster top ({ta!r} at {ha:.12g}, {tb!r} at {hb:.12g})"
            )
        at_a, at_b = ha <= m + tol, hb <= m + tol
        if not at_a and not at_b:
            new = next(namer)
            height[new], members[new], parent[new] = float(m), (), None
            parent[ta] = parent[tb] = new
        elif at_a and not at_b:
            parent[tb], new = ta, ta
        elif at_b and not at_a:
            parent[ta], new = tb, tb
        else:
            if members[ta] and members[tb]:
                raise TreeConstructionError(f"classes {ta!r} and {tb!r} at zero distance")
            keep, drop = (tb, ta) if members[tb] else (ta, tb)
            for c, p in parent.items():
                if p == drop:
                    parent[c] = keep
            del parent[drop], height[drop], members[drop]
            new = keep
        ds.merge(u, v)
        top[ds[u]] = new

    root = top[ds[0]]
    if x0 not in members[root] or abs(height[root]) > tol:
        raise TreeConstructionError(f"root {root!r} does not represent the basepoint class")

    kids: dict[str, list[str]] = {i: [] for i in parent}
    for c, p in parent.items():
        if p is not None:
            kids[p].append(c)
    ordered: dict[str, TreeNode] = {}
    stack = [root]
    while stack:
        v = stack.pop()
        ordered[v] = TreeNode(v, height[v], parent[v], tuple(members[v]))
        stack.extend(sorted(kids[v], key=lambda c: (height[c], c), reverse=True))
    ordered[root].height = 0.0

    leaf_map = {v: c[0] for c in classes for v in c}
    tree = RootedRealTree(ordered, root, x0, leaf_map)
    if verify:
        verify_end_tree(tree, D, table.bgp, tol)
    return tree


def verify_end_tree(tree: RootedRealTree, D: DistanceMatrix, bgp: np.ndarray, tol: float = DEFAULT_TOL) -> None:
    """Check heights, monotone parent links, and that tree meets equal (x,y)'.

    Equality of every meet height with the bottleneck product means tree
    distances between classes equal d*, so d* is a tree metric and in
    particular 0-hyperbolic.
    """
    d0 = D.d[D.idx(tree.basepoint)]
    for node in tree.nodes.values():
        if node.parent is not None and not node.height > tree.nodes[node.parent].height:
            raise TreeConstructionError(f"node {node.id!r} not above its parent")
        for v in node.members:
            if abs(node.height - d0[D.idx(v)]) > tol:
                raise TreeConstructionError(f"class node {node.id!r} height differs from d(x0, {v!r})")
    cls = tree.class_nodes
    reps = [D.idx(c) for c in cls]
    meets = tree.meet_heights(cls)
    gap = np.abs(meets - bgp[np.ix_(reps, reps)])
    if gap.size and gap.max() > tol:
        i, j = np.unravel_index(int(np.argmax(gap)), gap.shape)
        raise TreeConstructionError(
            f"tree meet of {cls[i]!r}, {cls[j]!r} is {meets[i, j]:.12g}, expected {bgp[reps[i], reps[j]]:.12g}"
        )


def dstar_matrix(tree: RootedRealTree, vertices: list[str]) -> np.ndarray:
    return tree.vertex_distance_matrix(vertices)


def end_map_report(
    D: DistanceMatrix,
    tree: RootedRealTree,
    g: MetricGraph | None = None,
    delta_bn: float | None = None,
    delta_4pt: float | None = None,
    A: float | None = None,
    tol: float = DEFAULT_TOL,
) -> DistortionReport:
    """Compare d with d* on every vertex pair of the tree's domain.

    Bounds recorded: 2(bottleneck + 2 delta) and the sharper 2A when the
    constants are supplied.  With ``g`` also checks that the map is
    isometric on each canonical geodesic from the basepoint.
    """
    verts = [v for v in D.nodes if v in tree.leaf_map]
    sub = D.restrict(verts) if len(verts) != D.n else D
    verts = list(sub.nodes)
    dstar = dstar_matrix(tree, verts)
    rep = DistortionReport(tuple(verts), sub.d, dstar, direction="contract", tol=tol)
    if delta_bn is not None and delta_4pt is not None:
        rep.bounds["2(bottleneck+2delta)"] = 2 * (delta_bn + 2 * delta_4pt)
        rep.bound_claimed = rep.bounds["2(bottleneck+2delta)"]
    if A is not None:
        rep.bounds["2A"] = 2 * A
        rep.bound_claimed = 2 * A if rep.bound_claimed is None else min(rep.bound_claimed, 2 * A)
    if g is not None:
        rep.checks["geodesic_isometry"] = geodesic_isometry_holds(g, sub, tree, tol)
    return rep


def geodesic_isometry_holds(g: MetricGraph, D: DistanceMatrix, tree: RootedRealTree, tol: float = DEFAULT_TOL) -> bool:
    """d*([v],[z]) = d(v,z) for every v on the canonical geodesic [x0, z]."""
    b = g.index[tree.basepoint]
    pred = shortest_path_predecessors(g, b, distances_from(g, b), tol)
    tin, tout = dfs_intervals(pred, b)
    verts = [v for v in D.nodes if v in g.index]
    gi = np.array([g.index[v] for v in verts])
    anc = (tin[gi][:, None] <= tin[gi][None, :]) & (tin[gi][None, :] < tout[gi][:, None])
    dstar = dstar_matrix(tree, verts)
    sub = D.restrict(verts).d if len(verts) != D.n else D.d
    return bool(np.all(np.abs(dstar - sub)[anc] <= tol))


class ComponentOracleResult(NamedTuple):
    sigma: float
    witness_path: list[str]


def component_sup_radius(
    g: MetricGraph, x0: str, x: str, y: str, D: DistanceMatrix | None = None
) -> ComponentOracleResult:
    """Sup of r such that x, y are joined by a path outside the ball B(x0, r).

    Radii are swept downward: vertices switch on in decreasing distance
    from x0 until x and y share a component.
    """
    for v in (x0, x, y):
        if v not in g.index:
            raise KeyError(f"unknown vertex {v!r}")
    b = g.index[x0]
    d0 = D.d[b] if D is not None else distances_from(g, b)
    if x == x0 or y == x0:
        return ComponentOracleResult(0.0, [x0])
    sigma, path = maximin_vertex_path(g, d0, g.index[x], g.index[y])
    return ComponentOracleResult(sigma, [g.nodes[i] for i in path])


def component_sup_radii(g: MetricGraph, x0: str, D: DistanceMatrix | None = None) -> np.ndarray:
    """``component_sup_radius`` for all vertex pairs at once."""
    b = g.index[x0]
    d0 = D.d[b] if D is not None else distances_from(g, b)
    eu, ev, _ = g.edge_arrays
    return maximin_fill(g.n, eu, ev, np.minimum(d0[eu], d0[ev]), d0)


def visual_distance(tree: RootedRealTree, x: str, y: str, a: float) -> float:
    """a^(-h) with h the height of the meet of [x] and [y]."""
    if not a > 1:
        raise ValueError(f"visual parameter must exceed 1, got {a!r}")
    nx_, ny_ = tree.leaf_map[x], tree.leaf_map[y]
    if nx_ == ny_:
        raise ValueError(f"{x!r} and {y!r} lie in the same class")
    return float(a ** (-tree.meet_height(x, y)))


def end_tree_for_graph(g: MetricGraph, x0: str, tol: float = DEFAULT_TOL) -> tuple[DistanceMatrix, RootedRealTree]:
    D = all_pairs_distances(g)
    return D, build_end_tree(D, x0, tol)
