"""Tree approximation procedures for finite subsets of a metric graph."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse.csgraph import dijkstra

from .bottleneck import certify_quasi_tree
from .endtree import RootedRealTree, build_end_tree, geodesic_isometry_holds
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
from .reports import DistortionReport


def _ordered_subset(g: MetricGraph, Z: Iterable[str]) -> list[str]:
    Z = list(dict.fromkeys(Z))
    if not Z:
        raise ValueError("subset Z must be nonempty")
    for z in Z:
        if z not in g.index:
            raise KeyError(f"unknown vertex {z!r}")
    return sorted(Z, key=g.index.__getitem__)


def geodesic_hull(g: MetricGraph, x0: str, Z: Iterable[str], tol: float = DEFAULT_TOL) -> list[str]:
    """Vertices of the union of canonical geodesics [x0, z], in identifier order."""
    b = g.index[x0]
    pred = shortest_path_predecessors(g, b, distances_from(g, b), tol)
    keep = set()
    for z in Z:
        keep.update(path_from_predecessors(pred, g.index[z]))
    return [g.nodes[i] for i in sorted(keep)]


def log_bounds(delta: float, n: int) -> dict[str, float]:
    """The two logarithmic error bounds for an n-point subset."""
    sharp = 0.0 if n <= 2 else 2 * delta * math.ceil(math.log2(n - 1))
    return {
        "2delta(log2 n+1)": 2 * delta * (math.log2(n) + 1),
        "2delta*ceil(log2(n-1))": sharp,
    }


def gromov_tree_approx(
    g: MetricGraph,
    x0: str,
    Z: Iterable[str],
    D: DistanceMatrix | None = None,
    delta: float | None = None,
    tol: float = DEFAULT_TOL,
):
    """Tree approximation of Z with chains restricted to the geodesic hull.

    Returns ``(tree, f, report)`` where f maps each hull vertex to its tree
    node.  Error on Z is bounded by 2 delta (log2 n + 1), n = |Z|.
    """
    Z = _ordered_subset(g, Z)
    if x0 not in g.index:
        raise KeyError(f"unknown vertex {x0!r}")
    if D is None:
        D = all_pairs_distances(g)
    if delta is None:
        delta = four_point_delta(D).delta
    Y = geodesic_hull(g, x0, Z, tol)
    DY = D.restrict(Y)
    tree = build_end_tree(DY, x0, tol)
    f = dict(tree.leaf_map)
    DZ = D.restrict(Z)
    rep = DistortionReport(
        DZ.nodes, DZ.d, tree.vertex_distance_matrix(list(DZ.nodes)), direction="contract", tol=tol
    )
    rep.bounds.update(log_bounds(delta, len(Z)))
    rep.bound_claimed = rep.bounds["2delta(log2 n+1)"]
    rep.checks["geodesic_isometry"] = geodesic_isometry_holds(g, DY, tree, tol)
    rep.values.update(delta=delta, n=len(Z), hull_size=len(Y))
    return tree, f, rep


def uniform_tree_approx(
    g: MetricGraph,
    x0: str,
    Z: Iterable[str],
    D: DistanceMatrix | None = None,
    constants: dict[str, float] | None = None,
    tree: RootedRealTree | None = None,
    tol: float = DEFAULT_TOL,
):
    """Restriction of the full end-approximating map to the geodesic hull of Z.

    ``constants`` may carry precomputed ``delta_bn``, ``delta_4pt`` and ``A``;
    otherwise they are computed.  The error bounds do not depend on |Z|.
    """
    Z = _ordered_subset(g, Z)
    if D is None:
        D = all_pairs_distances(g)
    if constants is None:
        cert = certify_quasi_tree(g, D=D, tol=tol)
        constants = {"delta_bn": cert.delta_bn, "delta_4pt": cert.delta_4pt, "A": cert.A}
    if tree is None:
        tree = build_end_tree(D, x0, tol)
    Y = geodesic_hull(g, x0, Z, tol)
    f = {y: tree.leaf_map[y] for y in Y}
    DZ = D.restrict(Z)
    rep = DistortionReport(
        DZ.nodes, DZ.d, tree.vertex_distance_matrix(list(DZ.nodes)), direction="contract", tol=tol
    )
    rep.bounds["2(bottleneck+2delta)"] = 2 * (constants["delta_bn"] + 2 * constants["delta_4pt"])
    rep.bounds["2A"] = 2 * constants["A"]
    rep.bound_claimed = min(rep.bounds.values())
    rep.checks["geodesic_isometry"] = geodesic_isometry_holds(g, D.restrict(Y), tree, tol)
    rep.values.update(constants)
    rep.values.update(n=len(Z), hull_size=len(Y))
    return tree, f, rep


def _path_edges(g: MetricGraph, path: list[int]) -> list[tuple[int, int, float]]:
    out = []
    for a, b in zip(path, path[1:]):
        nbrs, lens = g.neighbors(a)
        k = int(np.searchsorted(nbrs, b))
        out.append((a, b, float(lens[k])))
    return out


def incremental_subtree(g: MetricGraph, points: Sequence[str], tol: float = DEFAULT_TOL, chunk: int = 16):
    """Grow a subtree by joining each new point to its nearest subtree vertex.

    Returns ``(subtree, report)``; the report compares graph distances d with
    subtree path distances d_T (which always dominate d) on the points.
    Only one shortest-path run per point is made, so the full distance
    matrix is never formed.
    """
    points = list(dict.fromkeys(points))
    if len(points) < 2:
        raise ValueError("need at least two points")
    chunk = max(chunk, 2)
    idx = []
    for p in points:
        if p not in g.index:
            raise KeyError(f"unknown vertex {p!r}")
        idx.append(g.index[p])
    k = len(idx)
    dcols = np.empty((k, k))
    in_tree = np.zeros(g.n, dtype=bool)
    edges: dict[tuple[int, int], float] = {}
    for start in range(0, k, chunk):
        block = idx[start : start + chunk]
        dist = np.atleast_2d(dijkstra(g.adjacency, directed=False, indices=block))
        dcols[start : start + len(block)] = dist[:, idx]
        for off, s in enumerate(block):
            t = start + off
            row = dist[off]
            if t == 0:
                first = row
                continue
            if t == 1:
                source, target, row = idx[0], s, first
            else:
                source = s
                cand = np.nonzero(in_tree)[0]
                target = int(cand[np.argmin(row[cand])])  # argmin keeps lowest index on ties
            if t == 1 or not in_tree[s]:
                pred = shortest_path_predecessors(g, source, row, tol)
                path = path_from_predecessors(pred, target)
                for a, b, w in _path_edges(g, path):
                    edges[(min(a, b), max(a, b))] = w
                in_tree[path] = True
            in_tree[s] = True
    keep = np.nonzero(in_tree)[0]
    nodes = tuple(g.nodes[i] for i in keep)
    sub = MetricGraph(
        nodes,
        tuple((g.nodes[a], g.nodes[b], w) for (a, b), w in sorted(edges.items())),
        {v: g.labels[v] for v in nodes if v in g.labels},
    )
    if not sub.is_tree():
        raise RuntimeError("incremental construction produced a cycle")
    dT = dijkstra(sub.adjacency, directed=False, indices=[sub.index[p] for p in points])
    dT = dT[:, [sub.index[p] for p in points]]
    d = np.minimum(dcols, dcols.T)
    np.fill_diagonal(d, 0.0)
    rep = DistortionReport(tuple(points), d, dT, direction="expand", tol=tol)
    ext = dT[0, -1]
    rep.values["extreme_ratio"] = float(d[0, -1] / ext) if ext > 0 else 1.0
    return sub, rep


def ratio_table(rep: DistortionReport) -> list[tuple[str, float, float, float]]:
    """(point, d, d_T, d/d_T) from the first point to each later point."""
    out = []
    for j in range(1, len(rep.nodes)):
        a, b = rep.d[0, j], rep.image_d[0, j]
        out.append((rep.nodes[j], float(a), float(b), float(a / b) if b > 0 else 1.0))
    return out


@dataclass
class SubsetCertificate:
    budget: float | None
    samples: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(s["passed"] for s in self.samples)

    def to_dict(self) -> dict:
        return {
            "budget": self.budget,
            "passed": self.passed,
            "lower_bound_note": "lower = four-point delta / 6, a conservative certificate",
            "samples": self.samples,
        }


def finite_subset_certificate(
    g: MetricGraph,
    samples: Sequence[Iterable[str]],
    C_budget: float | None = None,
    D: DistanceMatrix | None = None,
    tol: float = DEFAULT_TOL,
) -> SubsetCertificate:
    """Upper and lower bounds on the best additive tree-embedding error of each sample.

    upper: smallest max error of the end-approximating tree built on the
    sample itself, over basepoints in the sample.  lower: the sample's
    four-point delta divided by 6.
    """
    if not samples:
        raise ValueError("need at least one sample")
    if D is None:
        D = all_pairs_distances(g)
    cert = SubsetCertificate(C_budget)
    for Z in samples:
        Z = _ordered_subset(g, Z)
        DZ = D.restrict(Z)
        best = None
        for x0 in DZ.nodes:
            tree = build_end_tree(DZ, x0, tol)
            err = DZ.d - tree.vertex_distance_matrix(list(DZ.nodes))
            e = float(err.max(initial=0.0))
            if best is None or e < best[0] - tol:
                i, j = np.unravel_index(int(np.argmax(err)), err.shape)
                best = (e, x0, (DZ.nodes[i], DZ.nodes[j]) if e > 0 else None)
        hyp = four_point_delta(DZ)
        lower = hyp.delta / 6
        upper = max(best[0], 0.0)
        passed = C_budget is None or upper <= C_budget + tol
        cert.samples.append(
            {
                "size": len(Z),
                "upper": upper,
                "upper_basepoint": best[1],
                "upper_witness": list(best[2]) if best[2] else None,
                "lower": lower,
                "four_point_delta": hyp.delta,
                "lower_witness": list(hyp.witness) if hyp.witness else None,
                "passed": passed,
                "below_lower_bound": C_budget is not None and C_budget < lower - tol,
            }
        )
    return cert
