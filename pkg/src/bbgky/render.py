"""Plain-text and LaTeX rendering of IR nodes and equations.

Within a traced commutator the bound family is written as a bare letter
(``Tr_F [V_A1F, g_A1F]``); elsewhere a family inside a matrix is a block and
is written in braces (``rho_A1{F}``).
"""
from __future__ import annotations

from .ir import (
    Comm, Correlation, Density, Equation, Family, InteractionOp, Mixed,
    One, PairedIndex, Product, SignedTerm, Single, TrComm, Zero,
)


def _excl(fam: Family) -> str:
    return "".join(fam.sorted_exclusions())


def _sub(idx, bound=None) -> str:
    """Subscript text of one index inside a matrix or operator."""
    if isinstance(idx, Single):
        return idx.name
    if idx == bound:
        return idx.name
    if idx.excluded:
        return "{" + idx.name + "/" + _excl(idx) + "}"
    return "{" + idx.name + "}"


def _sum_prefix(fam: Family) -> str:
    text = "sum_{" + fam.name + "}"
    return text + "/" + _excl(fam) if fam.excluded else text


def _op_text(op: InteractionOp, with_sums: bool = True, bound=None) -> str:
    body = "V_" + "".join(i.name for i in op.pair)
    if not with_sums:
        return body
    sums = [_sum_prefix(i) for i in op.pair if isinstance(i, Family) and i != bound]
    return " ".join(sums + [body])


def display(node, bound=None) -> str:
    """Plain-text form of any IR node."""
    if isinstance(node, Zero):
        return "0"
    if isinstance(node, One):
        return "1"
    if isinstance(node, Single):
        return node.name
    if isinstance(node, Family):
        return _sum_prefix(node)
    if isinstance(node, PairedIndex):
        return "{" + ", ".join(display(i) for i in node) + "}"
    if isinstance(node, InteractionOp):
        return _op_text(node)
    if isinstance(node, (Density, Correlation)):
        sym = "rho" if isinstance(node, Density) else "g"
        text = sym + "_" + "".join(_sub(i, bound) for i in node.indices)
        return "i hbar d/dt " + text if node.deriv else text
    if isinstance(node, Product):
        return " * ".join(display(f, bound) for f in node.factors)
    if isinstance(node, Comm):
        return f"[ {_op_text(node.op)}, {display(node.arg)} ]"
    if isinstance(node, TrComm):
        t = node.trace_index
        prefix = ""
        if isinstance(t, Family):
            prefix = _sum_prefix(t) + " "
        p = node.partner_index
        if isinstance(p, Family):
            prefix = _sum_prefix(p) + " " + prefix
        return (f"{prefix}Tr_{t.name} [{_op_text(node.op, False)}, "
                f"{display(node.arg, t if isinstance(t, Family) else None)}]")
    if isinstance(node, Mixed):
        return " * ".join([display(f) for f in node.factors] + [display(node.tail)])
    if isinstance(node, SignedTerm):
        return ("- " if node.sign < 0 else "") + display(node.term)
    if isinstance(node, Equation):
        return display(node.lhs) + " = " + _join(node.rhs, display, " + ", " - ")
    raise TypeError(f"cannot display {node!r}")


def _join(rhs, fmt, plus: str, minus: str) -> str:
    if not rhs:
        return "0"
    parts = []
    for k, st in enumerate(rhs):
        body = fmt(st.term)
        if k == 0:
            parts.append(("-" if st.sign < 0 else "") + body)
        else:
            parts.append((minus if st.sign < 0 else plus) + body)
    return "".join(parts)


# --- LaTeX ----------------------------------------------------------------

def _tex_sub(idx, bound=None) -> str:
    if isinstance(idx, Single) or idx == bound:
        return idx.name
    if idx.excluded:
        return "\\{" + idx.name + "/" + _excl(idx) + "\\}"
    return "\\{" + idx.name + "\\}"


def _tex_sum(fam: Family) -> str:
    if fam.excluded:
        return "\\sum_{" + fam.name + "/" + _excl(fam) + "}"
    return "\\sum_{" + fam.name + "}"


def _tex_op(op: InteractionOp, with_sums: bool = True) -> str:
    body = "V_{" + "".join(i.name for i in op.pair) + "}"
    if not with_sums:
        return body
    return " ".join([_tex_sum(i) for i in op.pair if isinstance(i, Family)] + [body])


def latex(node, bound=None) -> str:
    """LaTeX form of a term (no sign)."""
    if isinstance(node, Zero):
        return "0"
    if isinstance(node, One):
        return "1"
    if isinstance(node, (Density, Correlation)):
        sym = "\\rho" if isinstance(node, Density) else "g"
        text = sym + "_{" + "".join(_tex_sub(i, bound) for i in node.indices) + "}"
        return "i\\hbar\\frac{d}{dt} " + text if node.deriv else text
    if isinstance(node, Product):
        return "".join(latex(f, bound) for f in node.factors)
    if isinstance(node, Comm):
        return f"\\left[ {_tex_op(node.op)} , {latex(node.arg)} \\right]"
    if isinstance(node, TrComm):
        t = node.trace_index
        prefix = ""
        p = node.partner_index
        if isinstance(p, Family):
            prefix += _tex_sum(p) + " "
        if isinstance(t, Family):
            prefix += _tex_sum(t) + " "
        inner = latex(node.arg, t if isinstance(t, Family) else None)
        return f"{prefix}Tr_{{{t.name}}} [ {_tex_op(node.op, False)} , {inner} ]"
    if isinstance(node, Mixed):
        return "".join(latex(f) for f in node.factors) + latex(node.tail)
    raise TypeError(f"cannot render {node!r} as LaTeX")


def to_latex(eq: Equation) -> str:
    return latex(eq.lhs) + " = " + _join(eq.rhs, latex, " + ", " - ")
