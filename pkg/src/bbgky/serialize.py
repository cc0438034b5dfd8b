"""Kind-tagged JSON encoding of IR trees.

Every node is an object with a ``"kind"`` key:

=============  ==============================================================
kind           fields
=============  ==============================================================
single         ``name``
family         ``name``, ``excluded`` (sorted list of single labels)
pair           ``first``, ``second`` (index nodes)
density        ``indices`` (list of index nodes), ``deriv`` (bool)
correlation    ``indices``, ``deriv``
zero / one     (none)
product        ``factors`` (list of density/correlation nodes)
op             ``pair``
comm           ``op``, ``arg``
trcomm         ``op``, ``trace``, ``arg``
mixed          ``factors``, ``tail`` (a comm or trcomm node)
signed         ``sign`` (+1 or -1), ``term``
equation       ``lhs``, ``rhs`` (list of signed nodes), ``expansion``
=============  ==============================================================
"""
from __future__ import annotations

import json

from .errors import StructuralError
from .ir import (
    Comm, Correlation, Density, Equation, Family, InteractionOp, Mixed, One,
    PairedIndex, Product, SignedTerm, Single, TrComm, Zero, ONE, ZERO,
)


def to_data(node) -> dict:
    if isinstance(node, Single):
        return {"kind": "single", "name": node.name}
    if isinstance(node, Family):
        return {"kind": "family", "name": node.name, "excluded": node.sorted_exclusions()}
    if isinstance(node, PairedIndex):
        return {"kind": "pair", "first": to_data(node.first), "second": to_data(node.second)}
    if isinstance(node, (Density, Correlation)):
        kind = "density" if isinstance(node, Density) else "correlation"
        return {"kind": kind, "indices": [to_data(i) for i in node.indices], "deriv": node.deriv}
    if isinstance(node, Zero):
        return {"kind": "zero"}
    if isinstance(node, One):
        return {"kind": "one"}
    if isinstance(node, Product):
        return {"kind": "product", "factors": [to_data(f) for f in node.factors]}
    if isinstance(node, InteractionOp):
        return {"kind": "op", "pair": to_data(node.pair)}
    if isinstance(node, Comm):
        return {"kind": "comm", "op": to_data(node.op), "arg": to_data(node.arg)}
    if isinstance(node, TrComm):
        return {"kind": "trcomm", "op": to_data(node.op),
                "trace": to_data(node.trace_index), "arg": to_data(node.arg)}
    if isinstance(node, Mixed):
        return {"kind": "mixed", "factors": [to_data(f) for f in node.factors],
                "tail": to_data(node.tail)}
    if isinstance(node, SignedTerm):
        return {"kind": "signed", "sign": node.sign, "term": to_data(node.term)}
    if isinstance(node, Equation):
        return {"kind": "equation", "lhs": to_data(node.lhs),
                "rhs": [to_data(t) for t in node.rhs], "expansion": node.expansion}
    raise TypeError(f"cannot serialize {node!r}")


def from_data(data: dict):
    try:
        kind = data["kind"]
        if kind == "single":
            return Single(data["name"])
        if kind == "family":
            return Family(data["name"], frozenset(data.get("excluded", ())))
        if kind == "pair":
            return PairedIndex(from_data(data["first"]), from_data(data["second"]))
        if kind in ("density", "correlation"):
            cls = Density if kind == "density" else Correlation
            return cls(tuple(from_data(i) for i in data["indices"]), bool(data.get("deriv", False)))
        if kind == "zero":
            return ZERO
        if kind == "one":
            return ONE
        if kind == "product":
            return Product(tuple(from_data(f) for f in data["factors"]))
        if kind == "op":
            return InteractionOp(from_data(data["pair"]))
        if kind == "comm":
            return Comm(from_data(data["op"]), from_data(data["arg"]))
        if kind == "trcomm":
            return TrComm(from_data(data["op"]), from_data(data["trace"]), from_data(data["arg"]))
        if kind == "mixed":
            return Mixed(tuple(from_data(f) for f in data["factors"]), from_data(data["tail"]))
        if kind == "signed":
            return SignedTerm(int(data["sign"]), from_data(data["term"]))
        if kind == "equation":
            return Equation(from_data(data["lhs"]), tuple(from_data(t) for t in data["rhs"]),
                            data.get("expansion", "paper"))
    except (KeyError, TypeError) as exc:
        raise StructuralError(f"malformed node {data!r}: {exc}") from None
    raise StructuralError(f"unknown node kind {kind!r}")


def to_json(node, indent: int | None = None) -> str:
    return json.dumps(to_data(node), indent=indent, sort_keys=True)


def from_json(text: str):
    return from_data(json.loads(text))
