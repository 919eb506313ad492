import json

import pytest

from quasitree.cli import main
from quasitree.metric import load_graph
from quasitree.spaces import gen_cycle, gen_path, gen_random_tree


def write(path, g):
    path.write_text(json.dumps(g.to_document()))
    return str(path)


@pytest.fixture
def c4(tmp_path):
    return write(tmp_path / "c4.json", gen_cycle(4))


@pytest.fixture
def tree(tmp_path):
    return write(tmp_path / "tree.json", gen_random_tree(20, 1))


def read_report(path):
    return json.loads(path.read_text())["report"]


def test_analyze_tree(tree, tmp_path):
    out = tmp_path / "a"
    assert main(["analyze", tree, "--out", str(out)]) == 0
    rep = read_report(out / "analyze.json")
    assert rep["delta_4pt"] == 0 and rep["bottleneck"] == 0 and rep["chain_defect"] == 0


def test_analyze_budget_failure(c4, tmp_path, capsys):
    assert main(["analyze", c4, "--budget", "0.5", "--out", str(tmp_path / "a")]) == 1
    assert "witness" in capsys.readouterr().out


def test_input_errors(tmp_path, c4):
    assert main(["analyze", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"nodes": ["a", "b"], "edges": [{"u": "a", "v": "b", "length": 0}]}')
    assert main(["analyze", str(bad)]) == 2
    assert main(["endtree", c4, "--base", "zz", "--out", str(tmp_path / "e")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["approx", c4, "--mode", "nope"])
    assert exc.value.code == 2


def test_endtree_outputs(c4, tmp_path):
    out = tmp_path / "e"
    assert main(["endtree", c4, "--base", "v0", "--out", str(out)]) == 0
    assert "v1\t1.000000000\tv1,v3" in (out / "classes.tsv").read_text()
    for name in ("tree.nwk", "tree.dot", "gamma.dot", "psi.tsv", "report.json"):
        assert (out / name).exists()
    doc = json.loads((out / "report.json").read_text())
    assert doc["classes"] == [["v0"], ["v1", "v3"], ["v2"]]
    assert doc["end_map"]["max_additive"] == 2
    assert doc["composed"]["bound_satisfied"]


def test_endtree_path_newick(tmp_path):
    p = write(tmp_path / "p.json", gen_path(4))
    out = tmp_path / "e"
    assert main(["endtree", p, "--base", "0", "--out", str(out)]) == 0
    nwk = (out / "tree.nwk").read_text().strip()
    assert nwk.endswith(";") and nwk.count("(") == 3


def test_approx_uniform(c4, tmp_path):
    out = tmp_path / "u"
    args = ["approx", "--mode", "uniform", c4, "--base", "v0", "--subset", "v1,v2,v3", "--out", str(out)]
    assert main(args) == 0
    rep = read_report(out / "approx.json")
    assert rep["max_additive"] == 2 and rep["bounds"]["2A"] == {"value": 2, "holds": True} and rep["bound_satisfied"]
    assert (out / "pairs.tsv").read_text().count("\n") == 3


def test_approx_gromov_tree(tree, tmp_path):
    out = tmp_path / "g"
    assert main(["approx", "--mode", "gromov", tree, "--out", str(out)]) == 0
    assert read_report(out / "approx.json")["max_additive"] == 0


def test_approx_subtree_zigzag(tmp_path, capsys):
    s = tmp_path / "s.json"
    assert main(["gen", "strip", "--n", "4", "--spacing", "0.5", "--out", str(s)]) == 0
    assert main(["approx", "--mode", "subtree", str(s), "--order", "zigzag", "--out", str(tmp_path / "z")]) == 0
    rows = [l.split("\t") for l in capsys.readouterr().out.splitlines() if l.startswith("  ")]
    assert len(rows) == 4 and float(rows[-1][-1]) < 0.8


def test_approx_certify(c4, tmp_path):
    out = tmp_path / "c"
    args = ["approx", "--mode", "certify", c4, "--subset", "v0,v1,v2,v3;v0,v1", "--budget", "0.1", "--out", str(out)]
    assert main(args) == 1


def test_gen_commands(tmp_path, capsys):
    s = tmp_path / "strip.json"
    assert main(["gen", "strip", "--n", "10", "--spacing", "0.5", "--out", str(s)]) == 0
    assert "vertices 63  edges 182" in capsys.readouterr().err
    assert load_graph(s).n == 3 * 21
    assert main(["gen", "recttree", "--depth", "7", "--out", str(tmp_path / "r.json")]) == 2
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for f in (a, b):
        assert main(["gen", "randomtree", "--n", "50", "--seed", "7", "--out", str(f)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert main(["gen", "perturb", "--input", str(a), "--epsilon", "0.001", "--out", str(tmp_path / "p.json")]) == 0
    assert main(["gen", "comb", "--n", "3", "--length", "2", "--out", str(tmp_path / "c.json")]) == 0


def test_analyze_deterministic(c4, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}"
        main(["analyze", c4, "--out", str(out)])
        outs.append((out / "analyze.json").read_text().replace(str(out), ""))
    assert outs[0] == outs[1]
