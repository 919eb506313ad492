"""Re-derivations of the constants pinned in the acceptance suite."""
import math

import networkx as nx
import numpy as np
import pytest

from oracles import canonical_path, to_nx
from quasitree.approx import incremental_subtree
from quasitree.spaces import gen_rect_tree, gen_strip, rect_tree_midpoints, zigzag_points
from test_acceptance import RECT_DISTORTION, STRIP_ZIGZAG_RATIO


def subtree_oracle(g, points):
    """Incremental subtree rebuilt with networkx; returns (d, d_T) on the points."""
    G = to_nx(g)
    order = {v: i for i, v in enumerate(g.nodes)}
    T = nx.Graph()
    nx.add_path(T, canonical_path(g, points[0], points[1]))
    for p in points[2:]:
        if p in T:
            continue
        dist = nx.single_source_dijkstra_path_length(G, p, weight="length")
        target = min(T.nodes, key=lambda v: (dist[v], order[v]))
        nx.add_path(T, canonical_path(g, p, target))
    for u, v in T.edges:
        T[u][v]["length"] = G[u][v]["length"]
    k = len(points)
    d = np.zeros((k, k))
    dT = np.zeros((k, k))
    for i, p in enumerate(points):
        a = nx.single_source_dijkstra_path_length(G, p, weight="length")
        b = nx.single_source_dijkstra_path_length(T, p, weight="length")
        d[i] = [a[q] for q in points]
        dT[i] = [b[q] for q in points]
    return d, dT


def test_rect_distortion_closed_form():
    # each level adds two crossings of a rectangle short side, each costing 2 - sqrt2
    for depth, value in RECT_DISTORTION.items():
        assert value == pytest.approx((2 * depth - 1) * (2 - math.sqrt(2)), abs=1e-9)


@pytest.mark.parametrize("depth", [2, 3])
def test_rect_distortion_oracle(depth):
    g = gen_rect_tree(depth, 0.5)
    pts = rect_tree_midpoints(g, depth)
    d, dT = subtree_oracle(g, pts)
    assert (dT - d).max() == pytest.approx(RECT_DISTORTION[depth], abs=1e-9)
    _, rep = incremental_subtree(g, pts)
    np.testing.assert_allclose(rep.image_d, dT, atol=1e-9)


def test_strip_zigzag_oracle():
    g = gen_strip(20, 0.1)
    pts = zigzag_points(g, 19)
    d, dT = subtree_oracle(g, pts)
    assert d[0, -1] / dT[0, -1] == pytest.approx(STRIP_ZIGZAG_RATIO, abs=1e-9)
    assert abs(STRIP_ZIGZAG_RATIO * math.sqrt(2) - 1) <= 0.05
