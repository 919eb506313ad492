"""Command-line interface.

Exit codes: 0 ok, 1 budget check failed, 2 input error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .approx import (
    finite_subset_certificate,
    gromov_tree_approx,
    incremental_subtree,
    ratio_table,
    uniform_tree_approx,
)
from .bottleneck import certify_quasi_tree
from .endtree import build_end_tree, end_map_report
from .export import (
    class_table,
    dumps,
    fmt,
    gamma_to_dot,
    mapping_table,
    to_newick,
    tree_document,
    tree_to_dot,
)
from .metric import DEFAULT_TOL, GraphError, all_pairs_distances, gromov_matrix, load_graph
from .reports import DistortionReport
from .simplicial import LayeringError, integer_layering, phi_embedding
from .spaces import gen_comb, gen_random_tree, gen_rect_tree, gen_strip, perturb_metric, zigzag_points

EXIT_OK, EXIT_BUDGET, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _envelope(args, payload: dict) -> dict:
    config = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    return {"tool": "quasitree", "version": __version__, "config": config, **payload}


def _write(out: Path | None, name: str, text: str) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text, encoding="utf-8")


def _out_dir(args) -> Path | None:
    return Path(args.out) if args.out else None


def _load(args):
    g = load_graph(args.input)
    return g, all_pairs_distances(g)


def _split(s: str | None) -> list[str]:
    return [t for t in (s or "").split(",") if t]


def cmd_analyze(args) -> int:
    g, D = _load(args)
    rep = certify_quasi_tree(
        g, budget=args.budget, D=D, all_geodesics=args.all_geodesics, tol=args.tolerance
    )
    doc = _envelope(args, {"report": rep.to_dict()})
    _write(_out_dir(args), "analyze.json", dumps(doc))
    print(f"vertices      {g.n}")
    print(f"delta (4pt)   {fmt(rep.delta_4pt)}")
    print(f"bottleneck    {fmt(rep.delta_bn)}")
    print(f"chain defect  {fmt(rep.A)}")
    if rep.witness:
        x, y, z, path = rep.witness
        print(f"witness       x={x} y={y} z={z} path={'-'.join(path)}")
    if args.budget is not None:
        print(f"budget        {fmt(args.budget)} {'PASS' if rep.passed else 'FAIL'}")
    return EXIT_OK if rep.passed else EXIT_BUDGET


def _base(args, g) -> str:
    base = args.base if args.base is not None else g.nodes[0]
    if base not in g.index:
        raise InputError(f"basepoint {base!r} is not a vertex")
    return base


def cmd_endtree(args) -> int:
    g, D = _load(args)
    x0 = _base(args, g)
    tree = build_end_tree(D, x0, args.tolerance)
    gamma, psi = integer_layering(tree, args.tolerance)
    phi = phi_embedding(gamma, tree, args.tolerance)
    end_rep = end_map_report(D, tree, g, tol=args.tolerance)
    gp = gromov_matrix(D, x0)
    A0 = float(np.max(tree_meets(tree, D) - gp))
    end_rep.bounds["2A(x0)"] = 2 * A0
    end_rep.bound_claimed = 2 * A0

    # composed map x -> psi([x]) compared with d
    verts = list(D.nodes)
    images = [psi(tree.leaf_map[v]) for v in verts]
    comp = DistortionReport(tuple(verts), D.d, gamma.distance_matrix(images), direction="any", tol=args.tolerance)
    err = comp.errors
    comp.checks["lower"] = bool(err.max(initial=0.0) <= 2 * A0 + 4 + args.tolerance)
    comp.checks["upper"] = bool((-err).max(initial=0.0) <= 2 + args.tolerance)
    comp.values["A_basepoint"] = A0

    out = _out_dir(args)
    formats = set(_split(args.format)) or {"newick", "dot", "json"}
    if "newick" in formats:
        _write(out, "tree.nwk", to_newick(tree))
    if "dot" in formats:
        _write(out, "tree.dot", tree_to_dot(tree))
        _write(out, "gamma.dot", gamma_to_dot(gamma))
    if "json" in formats:
        _write(out, "tree.json", dumps(tree_document(tree)))
        _write(out, "gamma.json", dumps(gamma.to_document()))
    _write(out, "classes.tsv", class_table(tree))
    _write(out, "psi.tsv", mapping_table(("tree_node", "gamma_vertex"), psi.table().items()))
    _write(
        out,
        "phi.tsv",
        mapping_table(
            ("gamma_vertex", "tree_point"),
            ((v, f"{s[0]}@{fmt(s[1])}") for v, s in gamma.source.items()),
        ),
    )
    doc = _envelope(
        args,
        {
            "basepoint": x0,
            "classes": [list(tree.nodes[c].members) for c in tree.class_nodes],
            "end_map": end_rep.to_dict(),
            "phi": phi.to_dict(),
            "composed": comp.to_dict(),
        },
    )
    _write(out, "report.json", dumps(doc))
    if out is None:
        sys.stdout.write(to_newick(tree))
    print(f"classes {len(tree.class_nodes)}  tree nodes {len(tree.nodes)}  gamma vertices {gamma.n}", file=sys.stderr)
    return EXIT_OK


def tree_meets(tree, D) -> np.ndarray:
    return tree.meet_heights([tree.leaf_map[v] for v in D.nodes])


def cmd_approx(args) -> int:
    g, D = _load(args)
    out = _out_dir(args)
    tol = args.tolerance
    extra = {}
    if args.mode in ("gromov", "uniform"):
        x0 = _base(args, g)
        Z = _split(args.subset) or list(g.nodes)
        if args.mode == "gromov":
            _, _, rep = gromov_tree_approx(g, x0, Z, D=D, tol=tol)
        else:
            _, _, rep = uniform_tree_approx(g, x0, Z, D=D, tol=tol)
        passed = rep.bound_satisfied
    elif args.mode == "subtree":
        if args.order == "zigzag":
            if not g.labels:
                raise InputError("zigzag order needs a strip with coordinate labels")
            points = zigzag_points(g)
        else:
            points = _split(args.order) or list(g.nodes)
        _, rep = incremental_subtree(g, points, tol=tol)
        extra["ratio_table"] = [
            {"point": p, "d": a, "d_T": b, "ratio": r} for p, a, b, r in ratio_table(rep)
        ]
        passed = rep.bound_satisfied
    else:
        samples = [s.split(",") for s in (args.subset or "").split(";") if s] or [list(g.nodes)]
        cert = finite_subset_certificate(g, samples, args.budget, D=D, tol=tol)
        doc = _envelope(args, {"mode": args.mode, "certificate": cert.to_dict()})
        _write(out, "approx.json", dumps(doc))
        for k, s in enumerate(cert.samples):
            print(f"sample {k}: size {s['size']} upper {fmt(s['upper'])} lower {fmt(s['lower'])} {'PASS' if s['passed'] else 'FAIL'}")
        return EXIT_OK if cert.passed else EXIT_BUDGET
    doc = _envelope(args, {"mode": args.mode, "report": rep.to_dict(), **extra})
    _write(out, "approx.json", dumps(doc))
    _write(out, "pairs.tsv", rep.pair_dump())
    print(f"points {len(rep.nodes)}  max error {fmt(rep.max_additive)}", end="")
    if rep.bound_claimed is not None:
        print(f"  bound {fmt(rep.bound_claimed)}", end="")
    print(f"  {'PASS' if passed else 'FAIL'}")
    for row in extra.get("ratio_table", []):
        print(f"  {row['point']}\t{fmt(row['d'])}\t{fmt(row['d_T'])}\t{fmt(row['ratio'])}")
    return EXIT_OK if passed else EXIT_BUDGET


def cmd_gen(args) -> int:
    name = args.generator
    if name == "strip":
        g = gen_strip(args.n if args.n is not None else 10, args.spacing)
    elif name == "comb":
        g = gen_comb(int(args.n if args.n is not None else 5), args.length)
    elif name == "recttree":
        g = gen_rect_tree(args.depth, args.resolution)
    elif name == "randomtree":
        g = gen_random_tree(int(args.n if args.n is not None else 20), args.seed, args.length)
    else:
        base = load_graph(args.input) if args.input else None
        if base is None:
            raise InputError("perturb needs --input")
        g = perturb_metric(base, args.epsilon, args.seed)
    text = dumps(g.to_document())
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")
    print(f"vertices {g.n}  edges {len(g.edges)}", file=sys.stderr)
    return EXIT_OK


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOL)
    p.add_argument("--out", help="output directory (file for gen)")
    p.add_argument("--threads", type=int, default=1, help="accepted for compatibility; work is single-threaded")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quasitree", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"quasitree {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="hyperbolicity, bottleneck constant and chain defect")
    p.add_argument("input")
    p.add_argument("--budget", type=float)
    p.add_argument("--all-geodesics", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("endtree", help="build the end-approximating tree and its layering")
    p.add_argument("input")
    p.add_argument("--base")
    p.add_argument("--format", default="newick,dot,json", help="comma list of newick, dot, json")
    _common(p)
    p.set_defaults(func=cmd_endtree)

    p = sub.add_parser("approx", help="tree approximation of subsets")
    p.add_argument("input")
    p.add_argument("--mode", required=True, choices=["gromov", "uniform", "subtree", "certify"])
    p.add_argument("--base")
    p.add_argument("--subset", help="comma list; for certify, ';' separates samples")
    p.add_argument("--order", help="comma list of points, or 'zigzag' on a strip")
    p.add_argument("--budget", type=float)
    _common(p)
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("gen", help="generate an example graph")
    p.add_argument("generator", choices=["strip", "comb", "recttree", "randomtree", "perturb"])
    p.add_argument("--n", type=float, help="strip length, comb teeth, or tree size")
    p.add_argument("--spacing", type=float, default=0.5)
    p.add_argument("--depth", type=int, default=1)
    p.add_argument("--resolution", type=float, default=0.5)
    p.add_argument("--length", type=float, default=1.0, help="tooth length or max edge length")
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--input")
    _common(p)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.tolerance > 0:
        parser.error("--tolerance must be positive")
    try:
        return args.func(args)
    except (GraphError, InputError, KeyError, ValueError, LayeringError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
