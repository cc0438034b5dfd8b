"""Expression IR for hierarchy equations.

All nodes are frozen dataclasses, so structural equality and hashing come for
free and values can be shared between threads.  Matrix factors keep their
indices sorted (singles first, by letter and ordinal, then families), which
makes the index order of a factor part of its identity.

Families play two roles.  Inside a ``Density`` that is not under a trace they
denote the whole block of members (``rho_A1{F}``).  As the trace index of a
``TrComm`` (and wherever the same family appears in that commutator's
argument) they denote one bound summation member.  A family appearing in an
operator of a ``Comm`` is a free sum over the operator only.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Iterable, Union

from .errors import StructuralError, UsageError

LABEL_RE = re.compile(r"([A-Z])(0|[1-9][0-9]*)")
LETTER_RE = re.compile(r"[A-Z]")

# Ordinal 0 never names a real subsystem; the trace engine uses it for a
# temporary stand-in of a bound summation member.
PLACEHOLDER_ORDINAL = 0


def ordinal(label: str) -> int:
    return int(label[1:])


@dataclass(frozen=True)
class Single:
    name: str

    def __post_init__(self):
        if not isinstance(self.name, str) or not LABEL_RE.fullmatch(self.name):
            raise StructuralError(f"malformed subsystem label {self.name!r}")

    @property
    def letter(self) -> str:
        return self.name[0]

    @property
    def ordinal(self) -> int:
        return ordinal(self.name)

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Family:
    name: str
    excluded: frozenset = frozenset()

    def __post_init__(self):
        if not isinstance(self.name, str) or not LETTER_RE.fullmatch(self.name):
            raise StructuralError(f"malformed family name {self.name!r}")
        raw = self.excluded
        if isinstance(raw, (str, Single)):
            raw = (raw,)
        labels = []
        for item in raw:
            label = item.name if isinstance(item, Single) else item
            if not isinstance(label, str) or not LABEL_RE.fullmatch(label):
                raise StructuralError(f"malformed excluded label {label!r}")
            if label[0] != self.name:
                raise StructuralError(
                    f"excluded label {label} does not belong to family {self.name}")
            labels.append(label)
        if len(set(labels)) != len(labels):
            raise StructuralError(f"duplicate exclusions in family {self.name}")
        object.__setattr__(self, "excluded", frozenset(labels))

    @property
    def letter(self) -> str:
        return self.name

    def excluding(self, *labels: str) -> Family:
        return Family(self.name, self.excluded | {str(x) for x in labels})

    def sorted_exclusions(self) -> list[str]:
        return sorted(self.excluded, key=ordinal)

    def __str__(self):
        if not self.excluded:
            return "{" + self.name + "}"
        return "{" + self.name + "/" + "".join(self.sorted_exclusions()) + "}"


Index = Union[Single, Family]


def as_index(x) -> Index:
    if isinstance(x, (Single, Family)):
        return x
    if isinstance(x, str):
        if LETTER_RE.fullmatch(x):
            return Family(x)
        return Single(x)
    raise StructuralError(f"cannot interpret {x!r} as an index")


def index_key(idx: Index) -> tuple:
    if isinstance(idx, Single):
        return (0, idx.letter, idx.ordinal, ())
    return (1, idx.name, 0, tuple(ordinal(x) for x in idx.sorted_exclusions()))


def covers(idx: Index, label: str) -> bool:
    """True if the single subsystem ``label`` is represented by ``idx``."""
    if isinstance(idx, Single):
        return idx.name == label
    return label[0] == idx.name and label not in idx.excluded


def overlaps(a: Index, b: Index) -> bool:
    if isinstance(a, Single):
        return covers(b, a.name)
    if isinstance(b, Single):
        return covers(a, b.name)
    return a.name == b.name


def _check_disjoint(indices: Iterable[Index], what: str) -> None:
    indices = list(indices)
    for i, a in enumerate(indices):
        for b in indices[i + 1:]:
            if overlaps(a, b):
                raise StructuralError(f"index {a} repeated in {what}")


@dataclass(frozen=True)
class PairedIndex:
    first: Index
    second: Index

    def __post_init__(self):
        first, second = as_index(self.first), as_index(self.second)
        if first.letter == second.letter:
            raise StructuralError(
                f"paired indices {first}, {second} share the letter {first.letter}")
        object.__setattr__(self, "first", first)
        object.__setattr__(self, "second", second)

    def __iter__(self):
        return iter((self.first, self.second))


# --- matrix factors -------------------------------------------------------

def _sorted_indices(raw, what: str) -> tuple:
    if isinstance(raw, (str, Single, Family)):
        raw = (raw,)
    idx = [as_index(x) for x in raw]
    _check_disjoint(idx, what)
    return tuple(sorted(idx, key=index_key))


@dataclass(frozen=True)
class Density:
    indices: tuple
    deriv: bool = False

    def __post_init__(self):
        idx = _sorted_indices(self.indices, "density matrix")
        if not idx:
            raise StructuralError("density matrix needs at least one index")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "deriv", bool(self.deriv))


@dataclass(frozen=True)
class Correlation:
    indices: tuple
    deriv: bool = False

    def __post_init__(self):
        idx = _sorted_indices(self.indices, "correlation matrix")
        if len(idx) < 2:
            raise StructuralError("correlation matrix needs at least two indices")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "deriv", bool(self.deriv))


MatrixFactor = Union[Density, Correlation]


def rho(*labels, deriv: bool = False) -> Density:
    return Density(labels, deriv)


def g(*labels, deriv: bool = False) -> Correlation:
    return Correlation(labels, deriv)


def factor_key(f: MatrixFactor) -> tuple:
    return (0 if isinstance(f, Density) else 1,
            tuple(index_key(i) for i in f.indices), f.deriv)


# --- terms ----------------------------------------------------------------

@dataclass(frozen=True)
class Zero:
    pass


@dataclass(frozen=True)
class One:
    pass


ZERO = Zero()
ONE = One()


@dataclass(frozen=True)
class Product:
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))


@dataclass(frozen=True)
class InteractionOp:
    pair: PairedIndex

    def __post_init__(self):
        if not isinstance(self.pair, PairedIndex):
            object.__setattr__(self, "pair", PairedIndex(*self.pair))

    @property
    def u(self) -> Index:
        return self.pair.first

    @property
    def v(self) -> Index:
        return self.pair.second

    def replace_index(self, old: Index, new: Index) -> InteractionOp:
        u = new if self.u == old else self.u
        v = new if self.v == old else self.v
        return InteractionOp(PairedIndex(u, v))


def V(u, v) -> InteractionOp:
    return InteractionOp(PairedIndex(u, v))


@dataclass(frozen=True)
class Comm:
    op: InteractionOp
    arg: object


@dataclass(frozen=True)
class TrComm:
    op: InteractionOp
    trace_index: Index
    arg: object

    def __post_init__(self):
        t = as_index(self.trace_index)
        if t not in (self.op.u, self.op.v):
            raise StructuralError(f"trace index {t} is not an operator index")
        object.__setattr__(self, "trace_index", t)

    @property
    def partner_index(self) -> Index:
        return self.op.v if self.trace_index == self.op.u else self.op.u


@dataclass(frozen=True)
class Mixed:
    factors: tuple
    tail: object

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))


Term = Union[Zero, One, Density, Correlation, Product, Comm, TrComm, Mixed]
FACTOR_TYPES = (Density, Correlation)
COMMUTATOR_TYPES = (Comm, TrComm)


@dataclass(frozen=True)
class SignedTerm:
    sign: int
    term: object

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise StructuralError(f"sign must be +1 or -1, got {self.sign!r}")

    def negated(self) -> SignedTerm:
        return SignedTerm(-self.sign, self.term)


@dataclass(frozen=True)
class Equation:
    lhs: MatrixFactor
    rhs: tuple
    expansion: str = "paper"

    def __post_init__(self):
        if not isinstance(self.lhs, FACTOR_TYPES) or not self.lhs.deriv:
            raise StructuralError("equation lhs must be a derivative-flagged matrix")
        rhs = tuple(self.rhs)
        for st in rhs:
            if deriv_count(st.term):
                raise StructuralError("rhs terms may not carry a derivative flag")
        object.__setattr__(self, "rhs", rhs)

    @property
    def target(self) -> tuple:
        return tuple(i.name for i in self.lhs.indices)


# --- structural queries ---------------------------------------------------

def factors_of(term) -> tuple:
    if isinstance(term, FACTOR_TYPES):
        return (term,)
    if isinstance(term, Product):
        return term.factors
    if isinstance(term, One):
        return ()
    raise UsageError(f"{type(term).__name__} is not a matrix product")


def deriv_count(term) -> int:
    if isinstance(term, FACTOR_TYPES):
        return int(term.deriv)
    if isinstance(term, Product):
        return sum(deriv_count(f) for f in term.factors)
    if isinstance(term, COMMUTATOR_TYPES):
        return deriv_count(term.arg)
    if isinstance(term, Mixed):
        return sum(deriv_count(f) for f in term.factors) + deriv_count(term.tail)
    return 0


def correlation_count(term) -> int:
    """Number of correlation factors anywhere in the term."""
    if isinstance(term, Correlation):
        return 1
    if isinstance(term, Product):
        return sum(correlation_count(f) for f in term.factors)
    if isinstance(term, COMMUTATOR_TYPES):
        return correlation_count(term.arg)
    if isinstance(term, Mixed):
        return sum(correlation_count(f) for f in term.factors) + correlation_count(term.tail)
    return 0


def arg_indices(term) -> list:
    """Indices of all matrix factors of a product-like term."""
    return [i for f in factors_of(term) for i in f.indices]


def surviving(term) -> list:
    """Indices the value of ``term`` acts on (traced indices removed)."""
    if isinstance(term, (Zero, One)):
        return []
    if isinstance(term, (Density, Correlation, Product)):
        return arg_indices(term)
    if isinstance(term, Comm):
        out = arg_indices(term.arg)
        for x in (term.op.u, term.op.v):
            if not any(overlaps(x, y) for y in out):
                out.append(x)
        return out
    if isinstance(term, TrComm):
        out = [i for i in arg_indices(term.arg) if i != term.trace_index]
        p = term.partner_index
        if not any(overlaps(p, y) for y in out):
            out.append(p)
        return out
    if isinstance(term, Mixed):
        return [i for f in term.factors for i in f.indices] + surviving(term.tail)
    raise UsageError(f"unknown term {term!r}")


# --- canonical form -------------------------------------------------------

def _canon_product(items) -> object:
    factors = []
    for item in items:
        item = canonicalize(item)
        if isinstance(item, Zero):
            return ZERO
        if isinstance(item, One):
            continue
        if isinstance(item, Product):
            factors.extend(item.factors)
        elif isinstance(item, FACTOR_TYPES):
            factors.append(item)
        else:
            raise StructuralError(
                f"{type(item).__name__} cannot appear inside a matrix product")
    _check_disjoint([i for f in factors for i in f.indices], "matrix product")
    if sum(f.deriv for f in factors) > 1:
        raise StructuralError("more than one derivative-flagged factor in a product")
    factors.sort(key=factor_key)
    if not factors:
        return ONE
    if len(factors) == 1:
        return factors[0]
    return Product(tuple(factors))


def _canon_commutator(term):
    arg = canonicalize(term.arg)
    if isinstance(arg, (Zero, One)):
        # [V, 1] = 0
        return ZERO
    if isinstance(arg, COMMUTATOR_TYPES + (Mixed,)):
        raise StructuralError("commutator argument must be a matrix product")
    if isinstance(term, TrComm):
        if not any(overlaps(term.trace_index, i) for i in arg_indices(arg)):
            raise StructuralError(
                f"trace index {term.trace_index} does not occur in the argument")
    return replace(term, arg=arg)


def _canon_mixed(term):
    tail = canonicalize(term.tail)
    if isinstance(tail, Zero):
        return ZERO
    if not isinstance(tail, COMMUTATOR_TYPES):
        raise StructuralError("mixed term tail must be a commutator")
    head = _canon_product(term.factors)
    if isinstance(head, Zero):
        return ZERO
    kept, absorbed = [], []
    for f in factors_of(head):
        # A factor commutes with V_uv and passes through the trace when it
        # acts on neither operator index.
        if any(overlaps(i, x) for i in f.indices for x in (tail.op.u, tail.op.v)):
            kept.append(f)
        else:
            absorbed.append(f)
    if absorbed:
        tail = replace(tail, arg=_canon_product([tail.arg, *absorbed]))
    if not kept:
        return tail
    live = surviving(tail)
    for f in kept:
        for i in f.indices:
            if any(overlaps(i, y) for y in live):
                raise StructuralError(
                    f"multiplier index {i} overlaps the commutator's free indices")
    if sum(f.deriv for f in kept) + deriv_count(tail) > 1:
        raise StructuralError("more than one derivative-flagged factor in a term")
    return Mixed(tuple(kept), tail)


def canonicalize(term):
    """Return the canonical representative of ``term``.

    Idempotent.  Products are flattened, identities dropped, annihilators
    propagated and factors sorted density-first.  Multipliers of a ``Mixed``
    term that act on neither operator index are moved inside the commutator.
    """
    if isinstance(term, (Zero, One, Density, Correlation)):
        return term
    if isinstance(term, Product):
        return _canon_product(term.factors)
    if isinstance(term, COMMUTATOR_TYPES):
        return _canon_commutator(term)
    if isinstance(term, Mixed):
        return _canon_mixed(term)
    raise StructuralError(f"not a term: {term!r}")


def terms_equal(a, b) -> bool:
    return canonicalize(a) == canonicalize(b)


def collect(terms: Iterable[SignedTerm]) -> list[SignedTerm]:
    """Cancel terms equal up to sign, keeping first-appearance order."""
    net: dict = {}
    for st in terms:
        net[st.term] = net.get(st.term, 0) + st.sign
    out = []
    for term, count in net.items():
        sign = 1 if count > 0 else -1
        out.extend(SignedTerm(sign, term) for _ in range(abs(count)))
    return out


# --- substitution and family-sum refinement -------------------------------

def _subst_factor(f, old: Index, new: Index):
    if old not in f.indices:
        return f
    return type(f)(tuple(new if i == old else i for i in f.indices), f.deriv)


def substitute(term, old: Index, new: Index):
    """Replace every occurrence of index ``old`` by ``new`` (no canonicalization)."""
    if isinstance(term, (Zero, One)):
        return term
    if isinstance(term, FACTOR_TYPES):
        return _subst_factor(term, old, new)
    if isinstance(term, Product):
        return Product(tuple(substitute(f, old, new) for f in term.factors))
    if isinstance(term, Comm):
        return Comm(term.op.replace_index(old, new), substitute(term.arg, old, new))
    if isinstance(term, TrComm):
        t = new if term.trace_index == old else term.trace_index
        return TrComm(term.op.replace_index(old, new), t, substitute(term.arg, old, new))
    if isinstance(term, Mixed):
        return Mixed(tuple(substitute(f, old, new) for f in term.factors),
                     substitute(term.tail, old, new))
    raise StructuralError(f"not a term: {term!r}")


def _split_candidate(term, pivot: Single):
    """First summation family in ``term`` that still ranges over ``pivot``.

    Returns ``(family, bound)``; bound families are substituted in the
    argument too, free operator sums only in the operator.
    """
    if isinstance(term, Mixed):
        return _split_candidate(term.tail, pivot)
    if isinstance(term, TrComm) and isinstance(term.trace_index, Family):
        if covers(term.trace_index, pivot.name):
            return term.trace_index, True
    if isinstance(term, COMMUTATOR_TYPES):
        for x in (term.op.u, term.op.v):
            if isinstance(x, Family) and covers(x, pivot.name):
                if isinstance(term, TrComm) and x == term.trace_index:
                    continue
                return x, False
    return None


def _split_free(term, old: Family, new: Index):
    if isinstance(term, Mixed):
        return Mixed(term.factors, _split_free(term.tail, old, new))
    op = term.op.replace_index(old, new)
    if isinstance(term, TrComm):
        return TrComm(op, term.trace_index, term.arg)
    return Comm(op, term.arg)


def _split_at(term, pivot: Single) -> list:
    found = _split_candidate(term, pivot)
    if found is None:
        return [term]
    fam, bound = found
    rest = fam.excluding(pivot.name)
    if bound:
        hit, other = substitute(term, fam, pivot), substitute(term, fam, rest)
    else:
        hit, other = _split_free(term, fam, pivot), _split_free(term, fam, rest)
    return _split_at(hit, pivot) + _split_at(other, pivot)


def refine_family_sums(terms: Iterable[SignedTerm], pivots) -> list[SignedTerm]:
    """Split every family sum still ranging over a pivot into the pivot's
    summand plus the sum excluding it.  Output is canonical."""
    pivots = sorted({as_index(p) for p in pivots}, key=index_key)
    for p in pivots:
        if not isinstance(p, Single):
            raise UsageError(f"pivot {p} must be a single label")
    out = []
    for st in terms:
        pending = [st.term]
        for p in pivots:
            pending = [piece for t in pending for piece in _split_at(t, p)]
        for t in pending:
            t = canonicalize(t)
            if not isinstance(t, Zero):
                out.append(SignedTerm(st.sign, t))
    return out


# --- time derivative ------------------------------------------------------

def take_derivative(product) -> list:
    """Leibniz rule: one output per factor, that factor flagged as differentiated."""
    factors = factors_of(canonicalize(product)) if not isinstance(product, FACTOR_TYPES) else (product,)
    if not factors:
        raise UsageError("cannot differentiate a constant")
    if any(f.deriv for f in factors):
        raise UsageError("term already carries a derivative flag")
    out = []
    for k in range(len(factors)):
        flagged = [replace(f, deriv=True) if j == k else f for j, f in enumerate(factors)]
        out.append(flagged[0] if len(flagged) == 1 else Product(tuple(flagged)))
    return out
