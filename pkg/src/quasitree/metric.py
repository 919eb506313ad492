"""Finite metric-space substrate.

A :class:`MetricGraph` is a connected weighted graph standing in for a
geodesic space; its shortest-path metric is exposed as a
:class:`DistanceMatrix`.  Vertex order in ``MetricGraph.nodes`` is the
identifier order used for every tie-break in the package.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, NamedTuple, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from ._kernels import four_point_max

DEFAULT_TOL = 1e-9


class GraphError(ValueError):
    """Raised for malformed or invalid graph input."""


@dataclass(frozen=True)
class MetricGraph:
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str, float], ...]
    labels: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(str(v) for v in self.nodes))
        object.__setattr__(
            self, "edges", tuple((str(u), str(v), float(w)) for u, v, w in self.edges)
        )
        self._validate()

    def _validate(self):
        if not self.nodes:
            raise GraphError("graph has no vertices")
        index = {}
        for i, v in enumerate(self.nodes):
            if v in index:
                raise GraphError(f"duplicate vertex {v!r}")
            index[v] = i
        seen = set()
        for u, v, w in self.edges:
            for end in (u, v):
                if end not in index:
                    raise GraphError(f"edge ({u!r}, {v!r}) references unknown vertex {end!r}")
            if u == v:
                raise GraphError(f"self-loop at vertex {u!r}")
            if not (w > 0) or not math.isfinite(w):
                raise GraphError(f"nonpositive length {w!r} on edge ({u!r}, {v!r})")
            key = (u, v) if index[u] < index[v] else (v, u)
            if key in seen:
                raise GraphError(f"duplicate edge ({u!r}, {v!r})")
            seen.add(key)
        if len(self.nodes) > 1:
            ncomp, comp = connected_components(self.adjacency, directed=False)
            if ncomp > 1:
                stray = next(self.nodes[i] for i in range(len(self.nodes)) if comp[i] != comp[0])
                raise GraphError(f"disconnected graph: {ncomp} components (vertex {stray!r} unreachable from {self.nodes[0]!r})")

    @cached_property
    def index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.nodes)}

    @property
    def n(self) -> int:
        return len(self.nodes)

    @cached_property
    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Edge endpoints as index arrays (u < v) and lengths."""
        idx = self.index
        if not self.edges:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty, np.zeros(0)
        a = np.array([idx[u] for u, _, _ in self.edges], dtype=np.int64)
        b = np.array([idx[v] for _, v, _ in self.edges], dtype=np.int64)
        w = np.array([e[2] for e in self.edges], dtype=float)
        return np.minimum(a, b), np.maximum(a, b), w

    @cached_property
    def adjacency(self) -> csr_matrix:
        u, v, w = self.edge_arrays
        n = self.n
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        data = np.concatenate([w, w])
        m = csr_matrix((data, (rows, cols)), shape=(n, n))
        m.sort_indices()
        return m

    @cached_property
    def max_edge_length(self) -> float:
        w = self.edge_arrays[2]
        return float(w.max()) if len(w) else 0.0

    def neighbors(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Neighbor indices of vertex ``i`` in ascending order, with lengths."""
        a = self.adjacency
        lo, hi = a.indptr[i], a.indptr[i + 1]
        return a.indices[lo:hi], a.data[lo:hi]

    def is_tree(self) -> bool:
        return len(self.edges) == self.n - 1

    def to_document(self) -> dict:
        doc = {
            "nodes": list(self.nodes),
            "edges": [{"u": u, "v": v, "length": w} for u, v, w in self.edges],
        }
        if self.labels:
            doc["labels"] = {k: self.labels[k] for k in self.nodes if k in self.labels}
        return doc


def parse_graph(doc: Any) -> MetricGraph:
    """Validate an edge-list document (already decoded) into a graph."""
    if not isinstance(doc, dict):
        raise GraphError("graph document must be an object with 'nodes' and 'edges'")
    nodes = doc.get("nodes")
    edges = doc.get("edges")
    if not isinstance(nodes, list):
        raise GraphError("'nodes' must be an array of vertex identifiers")
    if not isinstance(edges, list):
        raise GraphError("'edges' must be an array of {u, v, length} records")
    parsed = []
    for k, rec in enumerate(edges):
        if not isinstance(rec, dict) or not {"u", "v", "length"} <= rec.keys():
            raise GraphError(f"edge #{k} must be an object with keys u, v, length: {rec!r}")
        length = rec["length"]
        if isinstance(length, bool) or not isinstance(length, (int, float)):
            raise GraphError(f"edge #{k} has non-numeric length {length!r}")
        parsed.append((rec["u"], rec["v"], length))
    labels = doc.get("labels") or {}
    if not isinstance(labels, dict):
        raise GraphError("'labels' must map vertex identifiers to coordinates")
    return MetricGraph(tuple(nodes), tuple(parsed), {str(k): v for k, v in labels.items()})


def load_graph(source: str | Path | dict) -> MetricGraph:
    """Load a graph from a JSON edge-list file, JSON text, or decoded document."""
    if isinstance(source, dict):
        return parse_graph(source)
    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise GraphError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"parse failure in {path}: {exc.msg} at line {exc.lineno}") from exc
    return parse_graph(doc)


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric distance matrix indexed by vertex identifiers."""

    nodes: tuple[str, ...]
    d: np.ndarray

    @cached_property
    def index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.nodes)}

    @property
    def n(self) -> int:
        return len(self.nodes)

    def idx(self, v: str) -> int:
        try:
            return self.index[v]
        except KeyError:
            raise KeyError(f"unknown vertex {v!r}") from None

    def dist(self, x: str, y: str) -> float:
        return float(self.d[self.idx(x), self.idx(y)])

    def restrict(self, vertices: Iterable[str]) -> "DistanceMatrix":
        keep = sorted({self.idx(v) for v in vertices})
        sub = self.d[np.ix_(keep, keep)]
        return DistanceMatrix(tuple(self.nodes[i] for i in keep), sub)


def all_pairs_distances(g: MetricGraph) -> DistanceMatrix:
    d = dijkstra(g.adjacency, directed=False)
    d = np.minimum(d, d.T)
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(g.nodes, d)


def distances_from(g: MetricGraph, source: int | Sequence[int]) -> np.ndarray:
    """Shortest-path distances from one or more source indices."""
    return dijkstra(g.adjacency, directed=False, indices=source)


def check_metric(D: DistanceMatrix, tol: float = DEFAULT_TOL) -> None:
    """Raise ValueError unless ``D`` is a (pseudo)metric within ``tol``."""
    d = D.d
    if np.any(np.abs(np.diag(d)) > tol):
        raise ValueError("nonzero diagonal")
    if np.any(np.abs(d - d.T) > tol):
        raise ValueError("asymmetric distances")
    if np.any(d < -tol):
        raise ValueError("negative distance")
    for y in range(D.n):
        if np.any(d > d[:, y, None] + d[None, y, :] + tol):
            raise ValueError(f"triangle inequality fails through {D.nodes[y]!r}")


def gromov_product(D: DistanceMatrix, x0: str, x: str, y: str) -> float:
    b, i, j = D.idx(x0), D.idx(x), D.idx(y)
    d = D.d
    return 0.5 * (d[b, i] + d[b, j] - d[i, j])


def gromov_matrix(D: DistanceMatrix, x0: str | int) -> np.ndarray:
    """All Gromov products (x, y) at basepoint ``x0``.

    Entries are clipped to [0, min(d(x0,x), d(x0,y))], which they satisfy
    exactly; this only removes rounding residue.
    """
    b = D.idx(x0) if isinstance(x0, str) else x0
    row = D.d[b]
    gp = 0.5 * (row[:, None] + row[None, :] - D.d)
    np.clip(gp, 0.0, np.minimum(row[:, None], row[None, :]), out=gp)
    np.fill_diagonal(gp, row)
    return gp


class Hyperbolicity(NamedTuple):
    delta: float
    witness: tuple[str, str, str, str] | None
    sampled: bool = False


def _order_witness(d: np.ndarray, quad: Sequence[int]) -> tuple[int, int, int, int]:
    # basepoint = smallest index; its partner in the largest pair-sum pairing
    # plays y, the other pair plays (x, z)
    i, j, k, l = sorted(quad)
    pairings = [((i, j), (k, l)), ((i, k), (j, l)), ((i, l), (j, k))]
    sums = [d[a] + d[b] for a, b in pairings]
    best = max(range(3), key=lambda t: (sums[t], -t))
    (w, y), (x, z) = pairings[best]
    return w, x, y, z


def four_point_delta(
    D: DistanceMatrix,
    exact_limit: int = 500,
    samples: int = 2_000_000,
    seed: int = 0,
) -> Hyperbolicity:
    """Four-point hyperbolicity constant with a witness (x0, x, y, z).

    delta = max over quadruples of min{(x,y), (y,z)} - (x,z) at x0, floored
    at 0.  Maximizing over all orderings of a quadruple reduces to half the
    gap between its largest and second-largest pair sums, which the compiled
    kernel enumerates over unordered quadruples.  Above ``exact_limit``
    vertices, ``samples`` random quadruples give a lower bound instead.
    """
    n = D.n
    if n < 4:
        return Hyperbolicity(0.0, None)
    d = np.ascontiguousarray(D.d, dtype=float)
    if n <= exact_limit:
        best, quad = four_point_max(d)
        sampled = False
    else:
        rng = np.random.default_rng(seed)
        q = rng.integers(0, n, size=(samples, 4))
        s1 = d[q[:, 0], q[:, 1]] + d[q[:, 2], q[:, 3]]
        s2 = d[q[:, 0], q[:, 2]] + d[q[:, 1], q[:, 3]]
        s3 = d[q[:, 0], q[:, 3]] + d[q[:, 1], q[:, 2]]
        s = np.sort(np.stack([s1, s2, s3], axis=1), axis=1)
        gap = 0.5 * (s[:, 2] - s[:, 1])
        t = int(np.argmax(gap))
        best, quad = float(gap[t]), tuple(int(v) for v in q[t])
        sampled = True
    if best <= 0.0 or len(set(quad)) < 4:
        return Hyperbolicity(0.0, None, sampled)
    w, x, y, z = _order_witness(d, quad)
    return Hyperbolicity(float(best), (D.nodes[w], D.nodes[x], D.nodes[y], D.nodes[z]), sampled)


def shortest_path_predecessors(
    g: MetricGraph, source: int, dist: np.ndarray | None = None, tol: float = DEFAULT_TOL
) -> np.ndarray:
    """Canonical shortest-path tree from ``source``.

    ``pred[v]`` is the smallest-index neighbour u of v with
    d(source, u) + len(u, v) = d(source, v); ``pred[source] = -1``.
    """
    if dist is None:
        dist = distances_from(g, source)
    a = g.adjacency
    rows = np.repeat(np.arange(g.n), np.diff(a.indptr))
    cols = a.indices
    ok = np.abs(dist[rows] + a.data - dist[cols]) <= tol
    pred = np.full(g.n, g.n, dtype=np.int64)
    np.minimum.at(pred, cols[ok], rows[ok])
    pred[source] = -1
    if np.any(pred == g.n):
        raise RuntimeError("shortest-path tree incomplete; tolerance too tight for this graph")
    return pred


def path_from_predecessors(pred: np.ndarray, target: int) -> list[int]:
    path = [target]
    while pred[path[-1]] >= 0:
        path.append(int(pred[path[-1]]))
    path.reverse()
    return path


def extract_geodesic(
    g: MetricGraph, x: str, y: str, dist_from_x: np.ndarray | None = None, tol: float = DEFAULT_TOL
) -> list[str]:
    """Deterministic shortest vertex path from ``x`` to ``y``."""
    for v in (x, y):
        if v not in g.index:
            raise KeyError(f"unknown vertex {v!r}")
    xi, yi = g.index[x], g.index[y]
    pred = shortest_path_predecessors(g, xi, dist_from_x, tol)
    return [g.nodes[i] for i in path_from_predecessors(pred, yi)]
