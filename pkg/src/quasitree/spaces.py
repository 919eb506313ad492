"""Example spaces, random instances, and quasi-isometry reports."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.sparse.csgraph import dijkstra

from .metric import DEFAULT_TOL, DistanceMatrix, MetricGraph
from .reports import DistortionReport

SQRT2 = math.sqrt(2.0)


def _steps(length: float, spacing: float, what: str) -> int:
    k = round(length / spacing)
    if k < 1 or abs(k * spacing - length) > 1e-9 * max(1.0, length):
        raise ValueError(f"degenerate spacing: {what} {length!r} is not a multiple of {spacing!r}")
    return k


def _octile_grid(prefix: str, nx: int, ny: int, h: float):
    """Vertex ids, coordinates and octile edges of an (nx+1) x (ny+1) grid."""
    ids = [f"{prefix}{i},{j}" for j in range(ny + 1) for i in range(nx + 1)]
    coords = [(i * h, j * h) for j in range(ny + 1) for i in range(nx + 1)]
    edges = []
    diag = h * SQRT2

    def vid(i, j):
        return ids[j * (nx + 1) + i]

    for j in range(ny + 1):
        for i in range(nx + 1):
            if i < nx:
                edges.append((vid(i, j), vid(i + 1, j), h))
            if j < ny:
                edges.append((vid(i, j), vid(i, j + 1), h))
                if i < nx:
                    edges.append((vid(i, j), vid(i + 1, j + 1), diag))
                if i > 0:
                    edges.append((vid(i, j), vid(i - 1, j + 1), diag))
    return ids, coords, edges


def gen_strip(n: float, spacing: float) -> MetricGraph:
    """Octile grid on [0, 1] x [0, n]; labels hold (x, y)."""
    if not 0 < spacing <= 0.5:
        raise ValueError(f"degenerate spacing {spacing!r}: need 0 < spacing <= 0.5")
    if not n > 0:
        raise ValueError("strip length must be positive")
    nx = _steps(1.0, spacing, "width")
    ny = _steps(float(n), spacing, "length")
    ids, coords, edges = _octile_grid("", nx, ny, spacing)
    return MetricGraph(tuple(ids), tuple(edges), dict(zip(ids, coords)))


def strip_vertex(g: MetricGraph, x: float, y: float, tol: float = 1e-9) -> str:
    """Vertex of a generated grid at coordinates (x, y)."""
    for v, c in g.labels.items():
        if abs(c[0] - x) <= tol and abs(c[1] - y) <= tol:
            return v
    raise KeyError(f"no vertex at ({x}, {y})")


def zigzag_points(g: MetricGraph, n: int | None = None) -> list[str]:
    """(0,0), (1,1), (0,2), (1,3), ... up to height n (default: strip top)."""
    top = max(c[1] for c in g.labels.values())
    n = int(math.floor(top + 1e-9)) if n is None else n
    lookup = {(round(c[0], 9), round(c[1], 9)): v for v, c in g.labels.items()}
    out = []
    for k in range(n + 1):
        key = (float(k % 2), float(k))
        if key not in lookup:
            raise KeyError(f"strip has no vertex at {key}")
        out.append(lookup[key])
    return out


def strip_spine_subtree(g: MetricGraph, points: list[str], tol: float = DEFAULT_TOL):
    """Subtree made of the vertical line x = 1/2 plus a horizontal spur to each point.

    Returns ``(subtree, report)`` comparing d with subtree distances on the points.
    """
    lab = g.labels
    mid = [v for v in g.nodes if abs(lab[v][0] - 0.5) <= 1e-9]
    if not mid:
        raise ValueError("strip has no vertices on x = 1/2")
    keep = set(mid)
    rows = {}
    for v in g.nodes:
        rows.setdefault(round(lab[v][1], 9), []).append(v)
    for p in points:
        keep.update(u for u in rows[round(lab[p][1], 9)] if min(lab[p][0], 0.5) - 1e-9 <= lab[u][0] <= max(lab[p][0], 0.5) + 1e-9)
    nodes = tuple(v for v in g.nodes if v in keep)
    edges = []
    for u, v, w in g.edges:
        if u in keep and v in keep:
            same_row = abs(lab[u][1] - lab[v][1]) <= 1e-9
            on_spine = abs(lab[u][0] - 0.5) <= 1e-9 and abs(lab[v][0] - 0.5) <= 1e-9
            if same_row or on_spine:
                edges.append((u, v, w))
    sub = MetricGraph(nodes, tuple(edges), {v: lab[v] for v in nodes})
    pi = [g.index[p] for p in points]
    d = dijkstra(g.adjacency, directed=False, indices=pi)[:, pi]
    si = [sub.index[p] for p in points]
    dT = dijkstra(sub.adjacency, directed=False, indices=si)[:, si]
    return sub, DistortionReport(tuple(points), d, dT, direction="expand", tol=tol)


def gen_comb(teeth: int, tooth_length: float) -> MetricGraph:
    """Spine [0, 1] with teeth at 0 and 1/n (n = 1..teeth); a finite tree."""
    if teeth < 1:
        raise ValueError("need at least one tooth")
    if not tooth_length > 0:
        raise ValueError("tooth length must be positive")
    spine = [("s0", 0.0)] + [(f"s{k}", 1.0 / k) for k in range(teeth, 0, -1)]
    nodes, edges, labels = [], [], {}
    for (a, xa), (b, xb) in zip(spine, spine[1:]):
        edges.append((a, b, xb - xa))
    for name, x in spine:
        tip = "t" + name[1:]
        nodes += [name, tip]
        labels[name] = (x, 0.0)
        labels[tip] = (x, tooth_length)
        edges.append((name, tip, tooth_length))
    return MetricGraph(tuple(nodes), tuple(edges), labels)


MAX_RECT_DEPTH = 6


def rect_tree_count(depth: int, resolution: float) -> int:
    """Vertex count of ``gen_rect_tree(depth, resolution)`` without building it."""
    per = 2 * math.ceil(0.5 / resolution)
    q = round(2 / resolution)
    total = (q + 1) ** 2
    for level in range(1, depth + 1):
        rects = 4 * 3 ** (level - 1)
        total += rects * ((q + 1) * (round(2 ** (level + 1) / resolution) + 1) + per - 1)
    return total


def gen_rect_tree(depth: int, resolution: float = 0.5, max_vertices: int = 300_000) -> MetricGraph:
    """Tree of rectangles: [0,2]^2 at the centre, level-n pieces [0,2] x [0,2^(n+1)].

    Each piece hangs from its parent by a unit edge attached at the middle
    of its near short side (local point (1, 0)); its three children attach
    at (1, 2^(n+1)), (0, 2^n) and (2, 2^n).  The centre's four children
    attach at the midpoints of its sides.  Connecting edges are subdivided
    so that their midpoints are vertices, named ``<child>:mid``.  Vertex ids
    are ``<rect>:<i>,<j>`` with rect ids like R0.2.1, so depth d nests in d+1.
    """
    if depth < 0 or depth > MAX_RECT_DEPTH:
        raise ValueError(f"size guard: depth must be in 0..{MAX_RECT_DEPTH}, got {depth}")
    if not 0 < resolution <= 1:
        raise ValueError("resolution must be in (0, 1]")
    q = _steps(2.0, resolution, "rectangle width")
    _steps(1.0, resolution, "unit")
    count = rect_tree_count(depth, resolution)
    if count > max_vertices:
        raise ValueError(f"size guard: {count} vertices exceeds limit {max_vertices}")
    per = 2 * math.ceil(0.5 / resolution)
    nodes, edges, labels = [], [], {}

    def add_rect(rid: str, level: int):
        ny = round(2 ** (level + 1) / resolution)
        ids, coords, e = _octile_grid(f"{rid}:", q, ny, resolution)
        nodes.extend(ids)
        edges.extend(e)
        labels.update(zip(ids, coords))

    def grid_id(rid, x, y):
        return f"{rid}:{round(x / resolution)},{round(y / resolution)}"

    def connect(parent_pt: str, child: str):
        step = 1.0 / per
        chain = [parent_pt] + [f"{child}:e{k}" for k in range(1, per)] + [grid_id(child, 1, 0)]
        chain[per // 2] = f"{child}:mid"
        for k, v in enumerate(chain[1:-1], start=1):
            nodes.append(v)
            labels[v] = (1.0, -1.0 + k * step)
        for a, b in zip(chain, chain[1:]):
            edges.append((a, b, step))

    add_rect("R0", 0)
    frontier = [("R0", 0)]
    for level in range(1, depth + 1):
        nxt = []
        for rid, lev in frontier:
            top = 2.0 ** (lev + 1)
            if lev == 0:
                spots = [(1, 0), (1, 2), (0, 1), (2, 1)]
            else:
                spots = [(1, top), (0, top / 2), (2, top / 2)]
            for k, (x, y) in enumerate(spots):
                child = f"{rid}.{k}"
                add_rect(child, level)
                connect(grid_id(rid, x, y), child)
                nxt.append((child, level))
        frontier = nxt
    return MetricGraph(tuple(nodes), tuple(edges), labels)


def rect_tree_midpoints(g: MetricGraph, n: int) -> list[str]:
    """Midpoints of connecting edges down to level n, by level then id."""
    mids = [v for v in g.nodes if v.endswith(":mid")]
    mids = [v for v in mids if v.split(":")[0].count(".") <= n]
    return sorted(mids, key=lambda v: (v.split(":")[0].count("."), v))


def gen_random_tree(n: int, seed: int = 0, max_len: float = 1.0) -> MetricGraph:
    """Random recursive tree: vertex k attaches to a uniform earlier vertex."""
    if n < 1:
        raise ValueError("need at least one vertex")
    if not max_len > 0:
        raise ValueError("max_len must be positive")
    rng = np.random.default_rng(seed)
    nodes = tuple(f"t{k}" for k in range(n))
    parents = [int(rng.integers(0, k)) for k in range(1, n)]
    lengths = max_len * (1.0 - rng.random(n - 1))
    edges = tuple((nodes[p], nodes[k], float(w)) for k, (p, w) in enumerate(zip(parents, lengths), start=1))
    return MetricGraph(nodes, edges)


def perturb_metric(g: MetricGraph, epsilon: float, seed: int = 0) -> MetricGraph:
    """Scale each edge by an independent factor in [1, 1 + epsilon]."""
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    wmin = min((w for _, _, w in g.edges), default=math.inf)
    if epsilon >= wmin:
        raise ValueError(f"epsilon {epsilon!r} too large: minimum edge length is {wmin!r}")
    if epsilon == 0:
        return g
    rng = np.random.default_rng(seed)
    f = 1.0 + epsilon * rng.random(len(g.edges))
    return MetricGraph(g.nodes, tuple((u, v, w * s) for (u, v, w), s in zip(g.edges, f)), dict(g.labels))


def gen_cycle(n: int, length: float = 1.0) -> MetricGraph:
    nodes = tuple(f"v{k}" for k in range(n))
    return MetricGraph(nodes, tuple((nodes[k], nodes[(k + 1) % n], length) for k in range(n)))


def gen_path(n: int, length: float = 1.0) -> MetricGraph:
    nodes = tuple(str(k) for k in range(n))
    return MetricGraph(nodes, tuple((nodes[k], nodes[k + 1], length) for k in range(n - 1)))


@dataclass
class QuasiIsometryReport:
    L: float
    C: float
    worst_pair: tuple[str, str] | None
    surjectivity_radius: float
    one_sided: bool
    frontier: tuple[float, float] = (1.0, 0.0)

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "C": self.C,
            "worst_pair": list(self.worst_pair) if self.worst_pair else None,
            "surjectivity_radius": self.surjectivity_radius,
            "one_sided": self.one_sided,
            "frontier_L_C": list(self.frontier),
        }


def qi_report(f: Mapping[str, str], X: DistanceMatrix, Y: DistanceMatrix, tol: float = DEFAULT_TOL) -> QuasiIsometryReport:
    """Best additive constant at L = 1 and the multiplicative frontier at C = 0."""
    missing = [x for x in X.nodes if x not in f]
    if missing:
        raise KeyError(f"map undefined on {missing[0]!r}")
    img = np.array([Y.idx(f[x]) for x in X.nodes])
    dy = Y.d[np.ix_(img, img)]
    dx = X.d
    gap = np.abs(dy - dx)
    if X.n > 1:
        i, j = np.unravel_index(int(np.argmax(gap)), gap.shape)
        worst = (X.nodes[min(i, j)], X.nodes[max(i, j)])
        C = float(gap[i, j])
    else:
        worst, C = None, 0.0
    off = ~np.eye(X.n, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        up = np.where(off, dy / dx, 1.0)
        down = np.where(off, dx / dy, 1.0)
    L = float(max(up.max(initial=1.0), down.max(initial=1.0)))
    radius = float(Y.d[:, np.unique(img)].min(axis=1).max())
    return QuasiIsometryReport(
        L=1.0,
        C=C,
        worst_pair=worst if C > 0 else None,
        surjectivity_radius=radius,
        one_sided=bool(np.all(dy <= dx + tol)),
        frontier=(L, 0.0),
    )
