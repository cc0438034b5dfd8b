"""Derivation of hierarchy equations for a declared ensemble."""
from __future__ import annotations

import threading
from dataclasses import dataclass

from .cluster import MODES, cluster_expand, expand_commutator
from .errors import SpecificationError, StructuralError, UsageError
from .ir import (
    Comm, Correlation, Density, Equation, Family, InteractionOp, Mixed,
    PairedIndex, SignedTerm, Single, Zero, as_index, canonicalize, collect,
    LABEL_RE, factors_of, index_key, refine_family_sums, take_derivative,
)
from .trace import TraceSet, trace_terms


@dataclass(frozen=True)
class SystemSpec:
    """Declared families, standalone singles and ordered interaction pairs."""
    families: tuple = ()
    singles: tuple = ()
    interactions: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "families", tuple(self.families))
        object.__setattr__(self, "singles", tuple(self.singles))
        pairs = []
        for p in self.interactions:
            try:
                pairs.append(p if isinstance(p, PairedIndex) else PairedIndex(*p))
            except StructuralError as exc:
                raise SpecificationError(str(exc)) from None
        object.__setattr__(self, "interactions", tuple(pairs))
        self.validate()

    def validate(self) -> None:
        if len(set(self.families)) != len(self.families):
            raise SpecificationError("family declared twice")
        for f in self.families:
            if not (isinstance(f, str) and len(f) == 1 and f.isupper()):
                raise SpecificationError(f"malformed family name {f!r}")
        if len(set(self.singles)) != len(self.singles):
            raise SpecificationError("single declared twice")
        for s in self.singles:
            m = LABEL_RE.fullmatch(s) if isinstance(s, str) else None
            if m is None or int(m.group(2)) < 1:
                raise SpecificationError(f"malformed single label {s!r}")
            if s[0] in self.families:
                raise SpecificationError(
                    f"single {s} clashes with the declared family {s[0]}")
        seen = set()
        for pair in self.interactions:
            for x in pair:
                if isinstance(x, Family):
                    if x.excluded or x.name not in self.families:
                        raise SpecificationError(f"interaction names undeclared family {x.name}")
                elif x.name not in self.singles:
                    raise SpecificationError(f"interaction names undeclared single {x.name}")
            key = frozenset((pair.first, pair.second))
            if key in seen:
                raise SpecificationError(
                    f"duplicate interaction {pair.first.letter}-{pair.second.letter}")
            seen.add(key)

    def all_indices(self) -> tuple:
        return tuple([Single(s) for s in self.singles] + [Family(f) for f in self.families])

    def resolve_target(self, labels) -> tuple:
        if isinstance(labels, str):
            labels = (labels,)
        out = []
        for label in labels:
            label = label.name if isinstance(label, Single) else label
            m = LABEL_RE.fullmatch(label) if isinstance(label, str) else None
            if m is None or int(m.group(2)) < 1:
                raise SpecificationError(f"malformed target label {label!r}")
            if label not in self.singles and label[0] not in self.families:
                raise SpecificationError(f"unknown subsystem {label}")
            out.append(Single(label))
        if not out:
            raise SpecificationError("empty derivation target")
        if len(set(out)) != len(out):
            raise SpecificationError("repeated label in derivation target")
        return tuple(sorted(out, key=index_key))


class DerivationMemo:
    """Thread-safe cache of derived equations keyed by sorted target labels."""

    def __init__(self):
        self._store: dict = {}
        self._lock = threading.Lock()

    def get(self, key):
        with self._lock:
            return self._store.get(key)

    def put(self, key, eq: Equation) -> Equation:
        with self._lock:
            return self._store.setdefault(key, eq)

    def __len__(self):
        with self._lock:
            return len(self._store)

    def __contains__(self, key):
        with self._lock:
            return key in self._store


def build_master_equation(spec: SystemSpec) -> Equation:
    """Interaction-picture von Neumann equation, one commutator per interaction."""
    if not spec.interactions:
        raise SpecificationError("no interactions declared")
    full = spec.all_indices()
    rhs = [SignedTerm(1, Comm(InteractionOp(pair), Density(full))) for pair in spec.interactions]
    return Equation(Density(full, deriv=True), tuple(rhs))


def complement_trace_set(spec: SystemSpec, target) -> TraceSet:
    names = {t.name for t in target}
    traced = [Single(s) for s in spec.singles if s not in names]
    for f in spec.families:
        traced.append(Family(f, frozenset(n for n in names if n[0] == f)))
    return TraceSet(frozenset(traced))


def reduced_rhs(spec: SystemSpec, target, expansion: str = "paper",
                master: Equation | None = None) -> list[SignedTerm]:
    """Trace the master equation down to ``target`` and cluster-expand."""
    master = master or build_master_equation(spec)
    traced = trace_terms(master.rhs, complement_trace_set(spec, target))
    expanded = [e for st in traced for e in expand_commutator(st, expansion)]
    return collect(refine_family_sums(expanded, target))


def subtract_scaled(main_rhs, sub_eq: Equation, multiplier, pivots) -> list[SignedTerm]:
    """Subtract ``multiplier * sub_eq.rhs`` from ``main_rhs`` and cancel."""
    multiplier = tuple(multiplier)
    new = []
    for st in refine_family_sums(sub_eq.rhs, pivots):
        term = st.term
        if multiplier:
            if isinstance(term, Mixed):
                term = Mixed(multiplier + term.factors, term.tail)
            else:
                term = Mixed(multiplier, term)
        term = canonicalize(term)
        if not isinstance(term, Zero):
            new.append(SignedTerm(-st.sign, term))
    return collect(list(main_rhs) + new)


def derive(spec: SystemSpec, target, memo: DerivationMemo | None = None,
           expansion: str = "paper") -> Equation:
    """Equation of motion for the correlation matrix over ``target``
    (the density matrix for a one-label target)."""
    if expansion not in MODES:
        raise UsageError(f"unknown expansion mode {expansion!r}")
    labels = spec.resolve_target(target)
    memo = DerivationMemo() if memo is None else memo
    return _derive(spec, labels, memo, expansion, build_master_equation(spec), ())


def _derive(spec, labels, memo, mode, master, stack) -> Equation:
    key = (mode, tuple(x.name for x in labels))
    cached = memo.get(key)
    if cached is not None:
        return cached
    assert key not in stack, f"derivation cycle through {key}"
    rhs = reduced_rhs(spec, labels, mode, master)
    if len(labels) == 1:
        return memo.put(key, Equation(Density(labels, deriv=True), tuple(rhs), mode))

    elements = cluster_expand(labels, mode)
    assert elements[-1] == Correlation(labels)
    for element in elements[:-1]:
        for flagged in take_derivative(element):
            factors = factors_of(flagged)
            hot = next(f for f in factors if f.deriv)
            rest = tuple(f for f in factors if not f.deriv)
            assert all(isinstance(i, Single) for i in hot.indices)
            assert len(hot.indices) < len(labels)
            if isinstance(hot, Density):
                assert len(hot.indices) == 1
            sub = _derive(spec, hot.indices, memo, mode, master, stack + (key,))
            rhs = subtract_scaled(rhs, sub, rest, labels)
    return memo.put(key, Equation(Correlation(labels, deriv=True), tuple(rhs), mode))
