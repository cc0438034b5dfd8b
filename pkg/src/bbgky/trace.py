"""Partial-trace rewrite rules for matrices, products and commutators."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product as cartesian

from .errors import DomainError, StructuralError, UsageError
from .ir import (
    ONE, ZERO, Comm, Correlation, Density, Family, Index, InteractionOp,
    PairedIndex, Product, SignedTerm, Single, TrComm, Zero, One,
    PLACEHOLDER_ORDINAL, as_index, canonicalize, covers, factors_of,
    index_key, ordinal, overlaps, substitute,
)


@dataclass(frozen=True)
class TraceSet:
    """Set of subsystems to trace over.

    A family entry means every member not in its exclusion set.  A single
    may sit next to a family of the same letter only if it is excluded there.
    """
    indices: frozenset

    def __post_init__(self):
        raw = self.indices
        if isinstance(raw, (str, Single, Family)):
            raw = (raw,)
        idx = [as_index(x) for x in raw]
        letters = [i.name for i in idx if isinstance(i, Family)]
        if len(letters) != len(set(letters)):
            raise StructuralError("trace set holds two families of one letter")
        for a in idx:
            for b in idx:
                if a is not b and overlaps(a, b):
                    raise StructuralError(f"trace set covers {a} twice")
        object.__setattr__(self, "indices", frozenset(idx))

    def family(self, letter: str) -> Family | None:
        for i in self.indices:
            if isinstance(i, Family) and i.name == letter:
                return i
        return None

    def singles(self, letter: str) -> list[Single]:
        return [i for i in self.indices if isinstance(i, Single) and i.letter == letter]

    def covers_label(self, label: str) -> bool:
        return any(covers(i, label) for i in self.indices)

    def contains(self, idx: Index) -> bool:
        """Whole-index membership (a family must be a subset of a traced family)."""
        if isinstance(idx, Single):
            return self.covers_label(idx.name)
        fam = self.family(idx.name)
        return fam is not None and fam.excluded <= idx.excluded

    def without_single(self, label: str) -> TraceSet:
        rest = set(self.indices)
        s = Single(label)
        if s in rest:
            rest.discard(s)
        else:
            fam = self.family(label[0])
            if fam is None or not covers(fam, label):
                raise DomainError(f"{label} is not traced")
            rest.discard(fam)
            rest.add(fam.excluding(label))
        return TraceSet(frozenset(rest))

    def replace_family(self, old: Family, new: Family) -> TraceSet:
        return TraceSet(frozenset((self.indices - {old}) | {new}))

    def sorted(self) -> list:
        return sorted(self.indices, key=index_key)


def as_trace_set(s) -> TraceSet:
    return s if isinstance(s, TraceSet) else TraceSet(frozenset(as_index(x) for x in s))


def _trace_density(factor: Density, s: TraceSet):
    kept = []
    for idx in factor.indices:
        if isinstance(idx, Single):
            if not s.covers_label(idx.name):
                kept.append(idx)
            continue
        fam = s.family(idx.name)
        if fam is not None:
            # the block's members outside the traced family survive as singles
            kept.extend(Single(x) for x in fam.excluded - idx.excluded)
            continue
        cut = {x.name for x in s.singles(idx.name) if covers(idx, x.name)}
        kept.append(idx.excluding(*cut) if cut else idx)
    if not kept:
        return ONE
    return Density(tuple(kept))


def _relevant(factor, s: TraceSet) -> TraceSet:
    return TraceSet(frozenset(
        t for t in s.indices if any(overlaps(t, i) for i in factor.indices)))


def _check_present(factors, s: TraceSet) -> None:
    for t in s.indices:
        if isinstance(t, Family):
            ok = any(
                (isinstance(i, Family) and i.name == t.name and isinstance(f, Density))
                or (isinstance(f, Correlation) and overlaps(t, i))
                for f in factors for i in f.indices)
        else:
            ok = any(overlaps(t, i) for f in factors for i in f.indices)
        if not ok:
            raise DomainError(f"cannot trace over {t}: not present in the matrix")


def trace_matrix(factor, s) -> object:
    """Trace one density or correlation matrix over ``s``."""
    s = as_trace_set(s)
    if factor.deriv:
        raise UsageError("cannot trace a derivative-flagged matrix")
    if isinstance(factor, Correlation):
        if any(overlaps(t, i) for t in s.indices for i in factor.indices):
            return ZERO
        return factor
    _check_present([factor], s)
    return _trace_density(factor, s)


def trace_product(product, s) -> object:
    """Trace a product factor-wise: Zero wins, Identity factors disappear."""
    s = as_trace_set(s)
    factors = factors_of(canonicalize(product))
    _check_present(factors, s)
    out = []
    for f in factors:
        if f.deriv:
            raise UsageError("cannot trace a derivative-flagged matrix")
        r = trace_matrix(f, _relevant(f, s))
        if isinstance(r, Zero):
            return ZERO
        if not isinstance(r, One):
            out.append(r)
    return canonicalize(Product(tuple(out)))


def trace_term(term, s):
    if isinstance(term, (Density, Correlation)):
        return trace_matrix(term, s)
    return trace_product(term, s)


def _split_op_index(idx: Index, s: TraceSet) -> list:
    """Split a family operator index so that every piece is wholly inside or
    wholly outside ``s``: residual family first, then split-off singles."""
    if isinstance(idx, Single):
        return [idx]
    cut = {x.name for x in s.singles(idx.name)}
    fam = s.family(idx.name)
    if fam is not None:
        cut |= fam.excluded
    cut -= idx.excluded
    pieces = [idx.excluding(*cut) if cut else idx]
    pieces.extend(Single(x) for x in sorted(cut, key=ordinal))
    return pieces


def _present(idx: Index, arg) -> bool:
    return any(overlaps(idx, i) for f in factors_of(arg) for i in f.indices)


def _bound_member_arg(arg, traced: Family, s: TraceSet):
    """Trace ``arg`` over ``s`` except for one member of ``traced``, which is
    left in the result as the bound summation variable."""
    placeholder = Single(f"{traced.name}{PLACEHOLDER_ORDINAL}")
    factors = list(factors_of(arg))
    for k, f in enumerate(factors):
        blocks = [i for i in f.indices if isinstance(i, Family) and i.name == traced.name]
        if blocks and isinstance(f, Density):
            block = blocks[0]
            rest = [i for i in f.indices if i != block]
            factors[k] = Density(tuple(rest + [placeholder, block.excluding(placeholder.name)]))
            break
    else:
        raise DomainError(f"family {traced.name} is absent from the commutator argument")
    fam = s.family(traced.name)
    s2 = s.replace_family(fam, fam.excluding(placeholder.name))
    out = trace_product(Product(tuple(factors)), s2)
    return substitute(out, placeholder, traced)


def trace_commutator(comm: Comm, s) -> list[SignedTerm]:
    """Trace ``[V_uv, M]`` over ``s``.

    Each elementary piece of the (possibly family-summed) operator falls in
    one of three cases: no operator index traced gives a commutator of the
    traced argument; one traced index gives a traced commutator that keeps
    that index inside the argument; both traced gives zero.
    """
    s = as_trace_set(s)
    if not isinstance(comm, Comm):
        raise UsageError("trace_commutator expects a Comm term")
    arg = canonicalize(comm.arg)
    out = []
    for u, v in cartesian(_split_op_index(comm.op.u, s), _split_op_index(comm.op.v, s)):
        op = InteractionOp(PairedIndex(u, v))
        inside = [s.contains(u), s.contains(v)]
        for x, traced in zip((u, v), inside):
            if not traced and not _present(x, arg):
                raise DomainError(f"operator index {x} is neither traced nor in the argument")
        if all(inside):
            continue
        if not any(inside):
            term = Comm(op, trace_term(arg, s))
        else:
            t = u if inside[0] else v
            if not _present(t, arg):
                raise DomainError(f"traced operator index {t} is absent from the argument")
            if isinstance(t, Single):
                reduced = trace_term(arg, s.without_single(t.name))
            else:
                reduced = _bound_member_arg(arg, t, s)
            term = TrComm(op, t, reduced)
        term = canonicalize(term)
        if not isinstance(term, Zero):
            out.append(SignedTerm(1, term))
    return out


def trace_terms(terms, s) -> list[SignedTerm]:
    """Linear extension over a signed-term list (commutators only)."""
    out = []
    for st in terms:
        out.extend(SignedTerm(st.sign * r.sign, r.term) for r in trace_commutator(st.term, s))
    return out
