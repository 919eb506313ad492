import math

import numpy as np
import pytest

from instances import random_graph, tripod
from quasitree.approx import (
    finite_subset_certificate,
    geodesic_hull,
    gromov_tree_approx,
    incremental_subtree,
    log_bounds,
    ratio_table,
    uniform_tree_approx,
)
from quasitree.endtree import end_map_report, end_tree_for_graph
from quasitree.metric import all_pairs_distances
from quasitree.spaces import gen_cycle, gen_random_tree, gen_strip, zigzag_points

C4_Z = ["v1", "v2", "v3"]


def test_log_bounds():
    b = log_bounds(1.0, 3)
    assert b["2delta(log2 n+1)"] == pytest.approx(2 * (math.log2(3) + 1))
    assert b["2delta*ceil(log2(n-1))"] == 2
    assert log_bounds(1.0, 2)["2delta*ceil(log2(n-1))"] == 0


def test_geodesic_hull():
    assert geodesic_hull(gen_cycle(4), "v0", ["v2"]) == ["v0", "v1", "v2"]
    assert set(geodesic_hull(tripod(), "a", ["b", "d"])) == {"a", "b", "c", "d"}


def test_gromov_approx_cycle():
    _, f, rep = gromov_tree_approx(gen_cycle(4), "v0", C4_Z)
    assert rep.max_additive == 2
    assert set(rep.witness) == {"v1", "v3"}
    assert rep.bound_claimed == pytest.approx(5.1699250014, abs=1e-9)
    assert rep.bound_satisfied and rep.checks["geodesic_isometry"]
    assert f["v1"] == f["v3"]


def test_gromov_approx_trivial_cases():
    t = gen_random_tree(25, 9)
    _, _, rep = gromov_tree_approx(t, "t0", t.nodes[::3])
    assert rep.max_additive == pytest.approx(0, abs=1e-12)
    _, _, rep = gromov_tree_approx(gen_strip(2, 0.5), "0,0", ["2,4"])
    assert rep.max_additive == 0 and rep.checks["geodesic_isometry"]
    with pytest.raises(ValueError):
        gromov_tree_approx(t, "t0", [])


@pytest.mark.parametrize("seed", range(4))
def test_gromov_approx_bound(seed):
    g = random_graph(20, 1000 + seed)
    Z = g.nodes[1::2]
    _, _, rep = gromov_tree_approx(g, "g0", Z)
    assert rep.bound_satisfied
    assert rep.max_additive <= rep.bounds["2delta*ceil(log2(n-1))"] + 1e-9


def test_uniform_approx_cycle():
    _, _, rep = uniform_tree_approx(gen_cycle(4), "v0", C4_Z)
    assert rep.max_additive == 2
    assert rep.bounds == {"2(bottleneck+2delta)": 6, "2A": 2}
    assert rep.bound_satisfied


def test_uniform_approx_full_set_matches_end_map():
    g = random_graph(18, 31)
    D, t = end_tree_for_graph(g, "g0")
    _, _, rep = uniform_tree_approx(g, "g0", g.nodes, D=D, tree=t)
    np.testing.assert_allclose(rep.image_d, end_map_report(D, t).image_d)
    t2 = gen_random_tree(20, 4)
    _, _, rep = uniform_tree_approx(t2, "t3", t2.nodes[::4])
    assert rep.max_additive == pytest.approx(0, abs=1e-12)


def test_incremental_subtree_tree_input():
    t = gen_random_tree(30, 12)
    pts = list(t.nodes[::-3])
    sub, rep = incremental_subtree(t, pts)
    assert sub.is_tree()
    assert rep.max_additive == pytest.approx(0, abs=1e-12)
    with pytest.raises(ValueError):
        incremental_subtree(t, pts[:1])


def test_incremental_subtree_expands():
    g = gen_strip(4, 0.5)
    sub, rep = incremental_subtree(g, zigzag_points(g))
    assert sub.is_tree()
    assert np.all(rep.image_d >= rep.d - 1e-12)
    table = ratio_table(rep)
    assert all(0 < r <= 1 for *_, r in table)
    # the far point of the zigzag sits on the other side of a diagonal staircase
    assert table[-1][3] < 0.8


def test_certificate_examples():
    t = gen_random_tree(15, 3)
    cert = finite_subset_certificate(t, [t.nodes[:6], t.nodes[5:]], C_budget=0)
    assert cert.passed
    assert all(s["upper"] == pytest.approx(0, abs=1e-12) and s["lower"] == pytest.approx(0, abs=1e-12) for s in cert.samples)

    cert = finite_subset_certificate(gen_cycle(4), [["v0", "v1", "v2", "v3"]], C_budget=0.1)
    s = cert.samples[0]
    assert s["lower"] == pytest.approx(1 / 6)
    assert 0 < s["upper"] <= 2
    assert not cert.passed and s["below_lower_bound"]
    assert sorted(s["lower_witness"]) == ["v0", "v1", "v2", "v3"]
    assert cert.to_dict()["passed"] is False


def test_certificate_bounds_ordered():
    g = random_graph(16, 77)
    rng = np.random.default_rng(0)
    samples = [list(rng.choice(g.nodes, size=6, replace=False)) for _ in range(5)]
    cert = finite_subset_certificate(g, samples)
    for s in cert.samples:
        assert s["lower"] <= s["upper"] + 1e-9
