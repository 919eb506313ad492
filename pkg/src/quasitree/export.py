"""Serialization: fixed-precision JSON, Newick, DOT and TSV tables."""
from __future__ import annotations

import json
import math
import re
from decimal import ROUND_HALF_EVEN, Decimal

import numpy as np

from .endtree import RootedRealTree
from .simplicial import SimplicialTree

_QUANT = Decimal("1e-9")
_MARK = "\x00num:"
_MARK_RE = re.compile(r'"\\u0000num:([^"]*)"')


def fmt(x: float) -> str:
    """9 decimal places, round-half-even on the shortest decimal repr."""
    q = Decimal(repr(float(x))).quantize(_QUANT, rounding=ROUND_HALF_EVEN)
    if q == 0:
        q = abs(q)
    return format(q, "f")


def _prepare(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return _MARK + fmt(x) if math.isfinite(x) else None
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _prepare(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_prepare(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _prepare(obj.tolist())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int | None = 2) -> str:
    """JSON text with every float written at 9 decimals (non-finite -> null)."""
    text = json.dumps(_prepare(obj), indent=indent, ensure_ascii=False)
    return _MARK_RE.sub(lambda m: m.group(1), text)


_NEWICK_SAFE = re.compile(r"^[A-Za-z0-9_.\-]+$")


def _newick_label(s: str) -> str:
    if _NEWICK_SAFE.match(s):
        return s
    return "'" + s.replace("'", "''") + "'"


def to_newick(tree: RootedRealTree) -> str:
    """Newick with branch lengths; class nodes labelled by their members joined with '|'."""
    kids = tree.children

    def label(v):
        node = tree.nodes[v]
        return _newick_label("|".join(node.members) if node.members else v)

    def rec(v):
        parts = [rec(c) for c in kids[v]]
        node = tree.nodes[v]
        s = f"({','.join(parts)})" if parts else ""
        s += label(v)
        if node.parent is not None:
            s += ":" + fmt(node.height - tree.nodes[node.parent].height)
        return s

    return rec(tree.root) + ";\n"


def _dot_id(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def tree_to_dot(tree: RootedRealTree) -> str:
    lines = ["digraph endtree {"]
    for v, node in tree.nodes.items():
        text = ",".join(node.members) if node.members else v
        shape = "ellipse" if node.members else "point"
        lines.append(f"  {_dot_id(v)} [label={_dot_id(text + ' h=' + fmt(node.height))}, shape={shape}];")
    for p, c, w in tree.edges():
        lines.append(f"  {_dot_id(p)} -> {_dot_id(c)} [label={_dot_id(fmt(w))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def tree_document(tree: RootedRealTree) -> dict:
    return {
        "root": tree.root,
        "basepoint": tree.basepoint,
        "nodes": [
            {"id": v, "height": n.height, "parent": n.parent, "members": list(n.members)}
            for v, n in tree.nodes.items()
        ],
    }


def class_table(tree: RootedRealTree) -> str:
    rows = ["node\theight\tmembers"]
    for v in tree.class_nodes:
        n = tree.nodes[v]
        rows.append(f"{v}\t{fmt(n.height)}\t{','.join(n.members)}")
    return "\n".join(rows) + "\n"


def gamma_to_dot(gamma: SimplicialTree) -> str:
    lines = ["graph gamma {"]
    for v in gamma.vertices:
        lines.append(f"  {_dot_id(v)} [label={_dot_id(f'{v} k={gamma.layer[v]}')}];")
    for p, c in gamma.edges():
        lines.append(f"  {_dot_id(p)} -- {_dot_id(c)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def mapping_table(header: tuple[str, str], rows) -> str:
    out = ["\t".join(header)]
    out += [f"{a}\t{b}" for a, b in rows]
    return "\n".join(out) + "\n"
