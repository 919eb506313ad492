import itertools

import numpy as np
import pytest

from instances import random_graph, tripod
from oracles import floyd_maximin, gromov, is_tree_metric
from quasitree.bottleneck import bottleneck_constant, chain_defect
from quasitree.metric import DistanceMatrix, MetricGraph, all_pairs_distances, four_point_delta
from quasitree.endtree import (
    QuotientError,
    bottleneck_gromov_products,
    build_end_tree,
    component_sup_radii,
    component_sup_radius,
    dprime_metric,
    dstar_matrix,
    end_map_report,
    end_tree_for_graph,
    quotient_classes,
    visual_distance,
)
from quasitree.spaces import gen_cycle, gen_path, gen_random_tree, gen_strip


def test_bgp_examples():
    D = all_pairs_distances(gen_cycle(4))
    bgp = bottleneck_gromov_products(D, "v0")
    assert bgp[D.idx("v1"), D.idx("v3")] == 1
    assert np.all(bgp >= gromov(D.d, 0) - 1e-12)
    T = all_pairs_distances(gen_random_tree(20, 3))
    np.testing.assert_allclose(bottleneck_gromov_products(T, "t5"), gromov(T.d, 5), atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_bgp_matches_floyd(seed):
    g = random_graph(30, 500 + seed, integer=seed % 2 == 0)
    D = all_pairs_distances(g)
    for b in (0, 11):
        from quasitree.metric import gromov_matrix

        assert np.array_equal(bottleneck_gromov_products(D, D.nodes[b]), floyd_maximin(gromov_matrix(D, b)))


@pytest.mark.parametrize("seed", range(4))
def test_dprime_pseudometric(seed):
    g = random_graph(18, 600 + seed)
    D = all_pairs_distances(g)
    dp = dprime_metric(D, "g0")
    assert np.allclose(dp, dp.T) and np.allclose(np.diag(dp), 0)
    assert np.all(dp <= D.d + 1e-12)
    np.testing.assert_allclose(dp[0], D.d[0], atol=1e-12)
    tri = dp[:, None, :] - dp[:, :, None] - dp[None, :, :]
    assert tri.max() <= 1e-9


def test_quotient_examples():
    D = all_pairs_distances(gen_cycle(4))
    dp = dprime_metric(D, "v0")
    assert dp[D.idx("v1"), D.idx("v3")] == 0
    assert quotient_classes(dp, D.nodes) == [("v0",), ("v1", "v3"), ("v2",)]
    for g in (gen_path(5), gen_random_tree(12, 1)):
        E = all_pairs_distances(g)
        assert all(len(c) == 1 for c in quotient_classes(dprime_metric(E, g.nodes[0]), E.nodes))


def test_quotient_rejects_nontransitive():
    d = np.array([[0, 0.4, 0.8], [0.4, 0, 0.4], [0.8, 0.4, 0]])
    with pytest.raises(QuotientError):
        quotient_classes(d, ("a", "b", "c"), tol=0.5)


def test_end_tree_examples():
    D, t = end_tree_for_graph(gen_path(4), "0")
    assert t.vertex_distance_matrix(list(D.nodes)) == pytest.approx(D.d)
    assert max(n.height for n in t.nodes.values()) == 3

    D, t = end_tree_for_graph(gen_cycle(4), "v0")
    heights = {c: t.nodes[k].height for k, c in t.class_map.items()}
    assert heights == {frozenset({"v0"}): 0, frozenset({"v1", "v3"}): 1, frozenset({"v2"}): 2}

    D, t = end_tree_for_graph(tripod(), "a")
    assert np.allclose(t.vertex_distance_matrix(list(D.nodes)), D.d)


def test_branch_ids_disjoint_from_vertices():
    g = MetricGraph(("_b0", "x", "y"), (("_b0", "x", 1.0), ("_b0", "y", 1.0)))
    D = all_pairs_distances(g)
    t = build_end_tree(D, "x")
    assert set(t.nodes) >= {"_b0", "x", "y"}
    for k, node in t.nodes.items():
        if not node.members:
            assert k not in g.index


@pytest.mark.parametrize("seed", range(4))
def test_end_tree_invariants(seed):
    g = random_graph(25, 700 + seed)
    D = all_pairs_distances(g)
    x0 = g.nodes[seed]
    t = build_end_tree(D, x0)
    classes = t.class_nodes
    dstar = t.distance_matrix(classes)
    # d* is 0-hyperbolic and realized by the tree
    assert four_point_delta(DistanceMatrix(tuple(classes), dstar)).delta <= 1e-9
    assert is_tree_metric(dstar)
    reps = [min(t.class_map[c], key=D.idx) for c in classes]
    idx = [D.idx(v) for v in reps]
    bgp = bottleneck_gromov_products(D, x0)
    d0 = D.d[D.idx(x0)]
    expected = d0[idx][:, None] + d0[idx][None, :] - 2 * bgp[np.ix_(idx, idx)]
    np.testing.assert_allclose(dstar, expected, atol=1e-9)
    # collapse criterion: classmates are equidistant from the basepoint
    for members in t.class_map.values():
        vals = [d0[D.idx(v)] for v in members]
        assert max(vals) - min(vals) <= 1e-9


def test_end_map_report_examples():
    D, t = end_tree_for_graph(gen_random_tree(15, 2), "t0")
    assert end_map_report(D, t).max_additive == pytest.approx(0, abs=1e-12)

    g = gen_cycle(4)
    D, t = end_tree_for_graph(g, "v0")
    rep = end_map_report(D, t, g=g)
    assert rep.max_additive == 2
    assert rep.max_additive == pytest.approx(2 * chain_defect(D, ["v0"]).value)
    assert rep.bound_satisfied and rep.checks["geodesic_isometry"]


@pytest.mark.parametrize("seed", range(3))
def test_end_map_lower_bound(seed):
    g = random_graph(20, 800 + seed)
    D, t = end_tree_for_graph(g, g.nodes[0])
    bn = bottleneck_constant(g, D).value
    delta = four_point_delta(D).delta
    err = D.d - dstar_matrix(t, list(D.nodes))
    assert err.min() >= -1e-9
    assert err.max() <= 2 * (bn + 2 * delta) + 1e-9


def test_component_oracle_examples():
    g = gen_cycle(4)
    res = component_sup_radius(g, "v0", "v1", "v3")
    assert res.sigma == 1
    assert res.witness_path[0] == "v1" and res.witness_path[-1] == "v3"
    assert component_sup_radius(g, "v0", "v0", "v2").sigma == 0
    t = gen_random_tree(15, 6)
    D = all_pairs_distances(t)
    gp = gromov(D.d, 0)
    for x, y in itertools.combinations(range(1, 15), 2):
        assert component_sup_radius(t, "t0", t.nodes[x], t.nodes[y], D).sigma == pytest.approx(gp[x, y])


@pytest.mark.parametrize("g", [gen_strip(3, 0.5), random_graph(20, 5), gen_cycle(7, 0.5)])
def test_component_sandwich(g):
    D = all_pairs_distances(g)
    x0 = g.nodes[0]
    sigma = component_sup_radii(g, x0, D)
    bgp = bottleneck_gromov_products(D, x0)
    lmax = max(w for *_, w in g.edges)
    off = ~np.eye(g.n, dtype=bool)
    assert np.all(bgp[off] <= sigma[off] + 1e-9)
    assert np.all(bgp[off] >= sigma[off] - lmax / 2 - 1e-9)


def test_visual_distance():
    D, t = end_tree_for_graph(tripod(3.0), "a")
    assert visual_distance(t, "b", "d", 2) == 0.125
    D, t = end_tree_for_graph(tripod(3.0), "c")
    assert visual_distance(t, "a", "b", 5) == 1
    with pytest.raises(ValueError):
        visual_distance(t, "a", "b", 1)
    D, t = end_tree_for_graph(gen_cycle(4), "v0")
    with pytest.raises(ValueError):
        visual_distance(t, "v1", "v3", 2)


def test_visual_distance_ultrametric():
    g = random_graph(14, 42)
    D, t = end_tree_for_graph(g, "g0")
    reps = [min(m, key=D.idx) for m in t.class_map.values()]
    for x, y, z in itertools.permutations(reps, 3):
        v = lambda p, q: visual_distance(t, p, q, 1.7)
        assert v(x, z) <= max(v(x, y), v(y, z)) + 1e-12
