import json

import numpy as np
import pytest

from instances import random_graph, tripod
from oracles import gromov, nx_distances, ordered_delta
from quasitree.metric import (
    DistanceMatrix,
    GraphError,
    all_pairs_distances,
    check_metric,
    extract_geodesic,
    four_point_delta,
    gromov_matrix,
    gromov_product,
    load_graph,
    parse_graph,
)
from quasitree.spaces import gen_cycle, gen_path, gen_strip


def edge_doc(edges, nodes=None):
    nodes = nodes or sorted({e[0] for e in edges} | {e[1] for e in edges})
    return {"nodes": nodes, "edges": [{"u": u, "v": v, "length": w} for u, v, w in edges]}


C4_EDGES = [("v0", "v1", 1), ("v1", "v2", 1), ("v2", "v3", 1), ("v3", "v0", 1)]


def test_load_cycle_document(tmp_path):
    path = tmp_path / "c4.json"
    path.write_text(json.dumps(edge_doc(C4_EDGES)))
    g = load_graph(path)
    assert g.n == 4 and len(g.edges) == 4


def test_zero_length_rejected():
    with pytest.raises(GraphError, match="nonpositive length"):
        load_graph(edge_doc([("a", "b", 0)]))


def test_disconnected_rejected():
    with pytest.raises(GraphError, match="disconnected"):
        load_graph(edge_doc([("a", "b", 1), ("c", "d", 1)]))


@pytest.mark.parametrize(
    "doc, msg",
    [
        ({"nodes": ["a"], "edges": [{"u": "a", "v": "a", "length": 1}]}, "self-loop"),
        ({"nodes": ["a", "b"], "edges": [{"u": "a", "v": "b", "length": 1}] * 2}, "duplicate edge"),
        ({"nodes": ["a", "a"], "edges": []}, "duplicate vertex"),
        ({"nodes": ["a"], "edges": [{"u": "a", "v": "z", "length": 1}]}, "unknown vertex"),
        ({"nodes": ["a", "b"], "edges": [{"u": "a", "v": "b", "length": "x"}]}, "non-numeric"),
        ({"nodes": ["a", "b"], "edges": [{"u": "a", "v": "b", "length": -2}]}, "nonpositive"),
        ([1, 2], "must be an object"),
    ],
)
def test_validation_messages(doc, msg):
    with pytest.raises(GraphError, match=msg):
        parse_graph(doc)


def test_parse_failure(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{nodes: ")
    with pytest.raises(GraphError, match="parse failure"):
        load_graph(bad)


def test_roundtrip_document():
    g = gen_strip(1, 0.5)
    h = load_graph(json.loads(json.dumps(g.to_document())))
    assert h == g
    assert h.labels["1,1"] == [0.5, 0.5]


def test_distances_examples():
    D = all_pairs_distances(gen_path(4))
    assert D.dist("0", "3") == 3
    D = all_pairs_distances(gen_cycle(4))
    assert D.dist("v0", "v2") == 2 and D.dist("v1", "v3") == 2
    D = all_pairs_distances(tripod(2.0))
    assert D.dist("a", "b") == 4


@pytest.mark.parametrize("seed", range(5))
def test_distances_match_networkx(seed):
    g = random_graph(25, seed)
    D = all_pairs_distances(g)
    np.testing.assert_allclose(D.d, nx_distances(g), atol=1e-12)
    check_metric(D)
    eu, ev, ew = g.edge_arrays
    assert np.all(D.d[eu, ev] <= ew + 1e-12)


def test_check_metric_rejects_triangle_violation():
    d = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], dtype=float)
    with pytest.raises(ValueError, match="triangle"):
        check_metric(DistanceMatrix(("a", "b", "c"), d))


def test_gromov_product_table():
    g = random_graph(20, 3)
    D = all_pairs_distances(g)
    for b in (0, 7):
        gp = gromov_matrix(D, b)
        np.testing.assert_allclose(gp, gromov(D.d, b), atol=1e-9)
        row = D.d[b]
        assert np.all(gp >= 0)
        assert np.all(gp <= np.minimum(row[:, None], row[None, :]))
        assert np.array_equal(gp, gp.T)
        assert np.all(gp[b] == 0)
        assert np.array_equal(np.diag(gp), row)
    assert gromov_product(D, "g0", "g3", "g5") == pytest.approx(gromov(D.d, 0)[3, 5])
    with pytest.raises(KeyError):
        gromov_product(D, "g0", "nope", "g1")


def test_four_point_examples():
    assert four_point_delta(all_pairs_distances(tripod())).delta == 0
    hyp = four_point_delta(all_pairs_distances(gen_cycle(4)))
    assert hyp.delta == 1
    assert hyp.witness == ("v0", "v1", "v2", "v3")
    assert four_point_delta(all_pairs_distances(gen_path(3))) == (0.0, None, False)


@pytest.mark.parametrize("seed", range(6))
def test_four_point_matches_definition(seed):
    g = random_graph(9 + seed, 40 + seed, integer=seed % 2 == 0)
    D = all_pairs_distances(g)
    hyp = four_point_delta(D)
    assert hyp.delta == pytest.approx(ordered_delta(D.d), abs=1e-12)
    if hyp.witness:
        w, x, y, z = (D.idx(v) for v in hyp.witness)
        G = gromov(D.d, w)
        assert min(G[x, y], G[y, z]) - G[x, z] == pytest.approx(hyp.delta, abs=1e-12)


def test_four_point_permutation_invariant():
    g = random_graph(15, 8)
    D = all_pairs_distances(g)
    perm = np.random.default_rng(0).permutation(D.n)
    P = DistanceMatrix(tuple(D.nodes[i] for i in perm), D.d[np.ix_(perm, perm)])
    assert four_point_delta(P).delta == pytest.approx(four_point_delta(D).delta, abs=1e-12)


def test_four_point_sampled_mode():
    D = all_pairs_distances(gen_cycle(8))
    hyp = four_point_delta(D, exact_limit=4, samples=20000)
    assert hyp.sampled
    assert 0 < hyp.delta <= four_point_delta(D).delta


def test_geodesics():
    assert extract_geodesic(gen_path(4), "0", "3") == ["0", "1", "2", "3"]
    assert extract_geodesic(gen_cycle(4), "v0", "v2") == ["v0", "v1", "v2"]
    t = tripod()
    assert extract_geodesic(t, "a", "b") == ["a", "c", "b"]
    with pytest.raises(KeyError):
        extract_geodesic(t, "a", "zz")
