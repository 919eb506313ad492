"""Integer layering of a rooted metric tree into a unit-edge simplicial tree.

Tree points are pairs ``(node, h)``: the point at height ``h`` on the edge
running from ``node``'s parent up to ``node`` (``h == height(node)`` is the
node itself).  The layer-k vertices of the simplicial tree are the points
of the tree at height exactly k, each joined to the point at height k - 1
below it on its branch toward the root.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from ._maximin import meet_heights
from .endtree import RootedRealTree
from .metric import DEFAULT_TOL, MetricGraph, distances_from
from .reports import DistortionReport


class LayeringError(RuntimeError):
    pass


def _layer(h: float, tol: float) -> int:
    return int(math.floor(h + tol))


def point_distances(tree: RootedRealTree, points: list[tuple[str, float]]) -> np.ndarray:
    """Pairwise tree distances between points ``(node, height)``."""
    nodes = [p[0] for p in points]
    h = np.array([p[1] for p in points], dtype=float)
    m = tree.meet_heights(nodes)
    m = np.minimum(m, np.minimum(h[:, None], h[None, :]))
    out = h[:, None] + h[None, :] - 2.0 * m
    np.fill_diagonal(out, 0.0)
    return out


@dataclass
class SimplicialTree:
    """Unit-edge rooted tree; each vertex remembers the tree point it came from."""

    layer: dict[str, int]
    parent: dict[str, str | None]
    source: dict[str, tuple[str, float]]
    root: str
    tree: RootedRealTree | None = field(default=None, repr=False)

    @cached_property
    def vertices(self) -> list[str]:
        return list(self.layer)

    @property
    def n(self) -> int:
        return len(self.layer)

    def edges(self) -> list[tuple[str, str]]:
        return [(p, v) for v, p in self.parent.items() if p is not None]

    def leaves(self) -> list[str]:
        has_child = {p for p in self.parent.values() if p is not None}
        return [v for v in self.layer if v not in has_child and v != self.root]

    def distance_matrix(self, ids: list[str] | None = None) -> np.ndarray:
        ids = self.vertices if ids is None else ids
        pos = {v: i for i, v in enumerate(self.vertices)}
        parent = np.array(
            [-1 if self.parent[v] is None else pos[self.parent[v]] for v in self.vertices], dtype=np.int64
        )
        lay = np.array([self.layer[v] for v in self.vertices], dtype=float)
        q = np.array([pos[v] for v in ids], dtype=np.int64)
        m = meet_heights(parent, lay, q)
        l = lay[q]
        return l[:, None] + l[None, :] - 2.0 * m

    def check(self) -> None:
        """Layer / parent consistency: one lower neighbour per non-root vertex."""
        if self.parent[self.root] is not None or self.layer[self.root] != 0:
            raise LayeringError("root must sit at layer 0 without parent")
        for v, p in self.parent.items():
            if v != self.root and (p is None or self.layer[p] != self.layer[v] - 1):
                raise LayeringError(f"vertex {v!r} lacks a parent one layer down")

    def to_document(self) -> dict:
        """Edge-list document (loadable as a graph) with layers and sources."""
        return {
            "nodes": list(self.vertices),
            "edges": [{"u": p, "v": v, "length": 1.0} for p, v in self.edges()],
            "layers": dict(self.layer),
            "sources": {v: {"node": s[0], "height": s[1]} for v, s in self.source.items()},
        }


class Psi:
    """The layering map: a tree point goes to the vertex at the floor of its height."""

    def __init__(self, tree: RootedRealTree, lo: dict[str, int], tol: float):
        self.tree = tree
        self.lo = lo
        self.tol = tol

    def locate(self, node: str, k: int) -> str:
        """Layer-k vertex on the branch from the root to ``node``."""
        c = node
        while self.lo[c] > k:
            c = self.tree.nodes[c].parent
        return f"{c}@{k}"

    def __call__(self, node: str, height: float | None = None) -> str:
        h = self.tree.height(node) if height is None else height
        return self.locate(node, _layer(h, self.tol))

    def table(self) -> dict[str, str]:
        return {v: self(v) for v in self.tree.nodes}


def integer_layering(tree: RootedRealTree, tol: float = DEFAULT_TOL, verify: bool = True):
    """Build Γ and ψ.  Verifies |d_Γ(ψx, ψy) - d_T(x, y)| <= 2 on tree nodes and Γ sources."""
    lo: dict[str, int] = {}
    layer: dict[str, int] = {}
    parent: dict[str, str | None] = {}
    source: dict[str, tuple[str, float]] = {}
    for v, node in tree.nodes.items():  # parents precede children
        if node.parent is None:
            lo[v] = 0
            ks = [0]
        else:
            lo[v] = _layer(tree.height(node.parent), tol) + 1
            ks = range(lo[v], _layer(node.height, tol) + 1)
        for k in ks:
            vid = f"{v}@{k}"
            layer[vid] = k
            source[vid] = (v, float(k))
    psi = Psi(tree, lo, tol)
    for vid, (v, k) in source.items():
        k = int(k)
        if k == 0:
            parent[vid] = None
        elif k - 1 >= lo[v]:
            parent[vid] = f"{v}@{k - 1}"
        else:
            parent[vid] = psi.locate(tree.nodes[v].parent, k - 1)
    gamma = SimplicialTree(layer, parent, source, f"{tree.root}@0", tree)
    gamma.check()
    if verify:
        pts = [(v, tree.height(v)) for v in tree.nodes] + list(source.values())
        dt = point_distances(tree, pts)
        images = [psi(p, h) for p, h in pts]
        dg = gamma.distance_matrix(images)
        gap = np.abs(dg - dt)
        if gap.max(initial=0.0) > 2 + tol:
            i, j = np.unravel_index(int(np.argmax(gap)), gap.shape)
            raise LayeringError(f"layering distorts {pts[i]!r}, {pts[j]!r} by {gap[i, j]:.6g} > 2")
    return gamma, psi


def _surjectivity_radius(tree: RootedRealTree, images: list[tuple[str, float]], tol: float) -> float:
    """Largest distance from a tree point to the nearest image point (exact)."""
    ids = list(tree.nodes)
    pos = {v: i for i, v in enumerate(ids)}
    cut: dict[str, list[float]] = {v: [] for v in ids}
    for v, h in images:
        cut[v].append(h)
    names = list(ids)
    rows, cols, data = [], [], []
    sources = []
    for v, hs in cut.items():
        for h in hs:
            if abs(h - tree.height(v)) <= tol:
                sources.append(pos[v])
    segments = []
    for v, node in tree.nodes.items():
        if node.parent is None:
            continue
        lo_h, hi_h = tree.height(node.parent), node.height
        inner = sorted(h for h in cut[v] if lo_h + tol < h < hi_h - tol)
        chain = [pos[node.parent]]
        heights = [lo_h]
        for h in inner:
            names.append(f"{v}~{h}")
            chain.append(len(names) - 1)
            heights.append(h)
            sources.append(len(names) - 1)
        chain.append(pos[v])
        heights.append(hi_h)
        for a, b, ha, hb in zip(chain, chain[1:], heights, heights[1:]):
            rows.append(a)
            cols.append(b)
            data.append(hb - ha)
            segments.append((a, b, hb - ha))
    m = len(names)
    if not segments:
        return 0.0
    adj = csr_matrix((data, (rows, cols)), shape=(m, m))
    f = dijkstra(adj, directed=False, indices=sorted(set(sources)), min_only=True)
    return float(max(0.5 * (f[a] + f[b] + w) for a, b, w in segments))


def phi_embedding(gamma: SimplicialTree, tree: RootedRealTree, tol: float = DEFAULT_TOL) -> DistortionReport:
    """Send each Γ vertex to its source point and compare distances.

    Checks d_Γ - 2 <= d_T(φx, φy) <= d_Γ on all vertex pairs and that every
    tree point lies within distance < 1 of the image.
    """
    for vid, (v, h) in gamma.source.items():
        if v not in tree.nodes or not (tree.height(v) + tol >= h):
            raise LayeringError(f"vertex {vid!r} does not come from this tree")
        p = tree.nodes[v].parent
        if p is not None and h < tree.height(p) - tol:
            raise LayeringError(f"vertex {vid!r} does not come from this tree")
    ids = gamma.vertices
    pts = [gamma.source[v] for v in ids]
    rep = DistortionReport(
        tuple(ids), gamma.distance_matrix(ids), point_distances(tree, pts), direction="contract", tol=tol
    )
    rep.bound_claimed = 2.0
    radius = _surjectivity_radius(tree, pts, tol)
    rep.values["surjectivity_radius"] = radius
    rep.checks["surjectivity_radius_below_1"] = radius < 1.0
    return rep


def prune_leaves(gamma: SimplicialTree, n: int, verify: bool = True) -> SimplicialTree:
    """``n`` rounds of simultaneous leaf deletion; the root is never removed."""
    if n < 0:
        raise ValueError("pruning depth must be nonnegative")
    alive = dict(gamma.parent)
    for _ in range(n):
        has_child = {p for p in alive.values() if p is not None}
        leaves = [v for v in alive if v not in has_child and v != gamma.root]
        if not leaves:
            break
        for v in leaves:
            del alive[v]
    out = SimplicialTree(
        {v: gamma.layer[v] for v in alive},
        alive,
        {v: gamma.source[v] for v in alive},
        gamma.root,
        gamma.tree,
    )
    if verify and n > 0:
        # nearest surviving ancestor is a retraction moving points at most n
        retract = {}
        for v in gamma.vertices:
            u = v
            while u not in alive:
                u = gamma.parent[u]
            retract[v] = u
        before = gamma.distance_matrix()
        after = out.distance_matrix([retract[v] for v in gamma.vertices])
        if np.abs(before - after).max(initial=0.0) > 2 * n:
            raise LayeringError("pruned tree is not (1, 2n)-close to the input")
    return out


def _tree_adjacency(space) -> tuple[list[str], list[list[tuple[int, float]]]]:
    if isinstance(space, RootedRealTree):
        ids = list(space.nodes)
        pos = {v: i for i, v in enumerate(ids)}
        adj = [[] for _ in ids]
        for p, c, w in space.edges():
            adj[pos[p]].append((pos[c], w))
            adj[pos[c]].append((pos[p], w))
        return ids, adj
    ids = list(space.nodes)
    adj = [[] for _ in ids]
    eu, ev, ew = space.edge_arrays
    for a, b, w in zip(eu.tolist(), ev.tolist(), ew.tolist()):
        adj[a].append((b, w))
        adj[b].append((a, w))
    return ids, adj


def count_deep_components(space, x: str, r: float, R: float, tol: float = DEFAULT_TOL) -> int:
    """Components of the complement of the closed ball B(x, r) with diameter >= R.

    Trees (a RootedRealTree or an acyclic MetricGraph) are treated as
    continua: each edge crossing the sphere starts one component, made of
    the edge's far part plus everything beyond it.  Graphs with cycles use
    vertex components (vertices with d(x, u) > r, joined along edges) and
    ambient distances for diameters.
    """
    if r < 0 or R < 0:
        raise ValueError("radii must be nonnegative")
    is_tree = isinstance(space, RootedRealTree) or space.is_tree()
    if not is_tree:
        return _count_vertex_components(space, x, r, R, tol)
    ids, adj = _tree_adjacency(space)
    if x not in ids:
        raise KeyError(f"unknown vertex {x!r}")
    s = ids.index(x)
    n = len(ids)
    dist = np.zeros(n)
    par = np.full(n, -1)
    order = [s]
    seen = np.zeros(n, dtype=bool)
    seen[s] = True
    for u in order:
        for w, l in adj[u]:
            if not seen[w]:
                seen[w] = True
                par[w] = u
                dist[w] = dist[u] + l
                order.append(w)
    reach = np.zeros(n)  # farthest descent below a vertex
    diam = np.zeros(n)  # diameter of the subtree below a vertex
    for u in reversed(order):
        arms = sorted((reach[w] + dist[w] - dist[u] for w, _ in adj[u] if par[w] == u), reverse=True)
        if arms:
            reach[u] = arms[0]
            diam[u] = max(max(diam[w] for w, _ in adj[u] if par[w] == u), arms[0] + (arms[1] if len(arms) > 1 else 0.0))
    count = 0
    for w in range(n):
        u = par[w]
        if u >= 0 and dist[u] <= r + tol and dist[w] > r + tol:
            size = max(diam[w], dist[w] - r + reach[w])
            if size >= R - tol:
                count += 1
    return count


def _count_vertex_components(g: MetricGraph, x: str, r: float, R: float, tol: float) -> int:
    if x not in g.index:
        raise KeyError(f"unknown vertex {x!r}")
    d0 = distances_from(g, g.index[x])
    outside = d0 > r + tol
    eu, ev, ew = g.edge_arrays
    keep = outside[eu] & outside[ev]
    idx = np.nonzero(outside)[0]
    if not len(idx):
        return 0
    remap = -np.ones(g.n, dtype=np.int64)
    remap[idx] = np.arange(len(idx))
    sub = csr_matrix(
        (np.ones(int(keep.sum())), (remap[eu[keep]], remap[ev[keep]])), shape=(len(idx), len(idx))
    )
    ncomp, lab = connected_components(sub, directed=False)
    count = 0
    for c in range(ncomp):
        members = idx[lab == c]
        if distances_from(g, members)[:, members].max() >= R - tol:
            count += 1
    return count
