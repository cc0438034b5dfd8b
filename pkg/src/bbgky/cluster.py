"""Cluster decomposition of multi-index density matrices."""
from __future__ import annotations

from dataclasses import replace
from itertools import combinations, product as cartesian

from .errors import StructuralError, UsageError
from .ir import (
    Comm, Correlation, Density, Family, Product, SignedTerm, TrComm,
    as_index, canonicalize, factors_of, index_key,
)

MODES = ("paper", "ursell")


def set_partitions(items: list) -> list[list[list]]:
    if not items:
        return [[]]
    first, rest = items[0], items[1:]
    out = []
    for part in set_partitions(rest):
        out.append([[first]] + part)
        for k in range(len(part)):
            out.append(part[:k] + [[first] + part[k]] + part[k + 1:])
    return out


def _block(indices):
    if len(indices) == 1:
        return Density(tuple(indices))
    return Correlation(tuple(indices))


def cluster_expand(indices, mode: str = "paper") -> list:
    """Expand the density matrix over ``indices`` into cluster terms.

    ``paper``: the all-singles product, then every single-correlation product
    for subsets of size 2..n-1 (by size, then lexicographic), then the full
    correlation matrix.  ``ursell``: one term per set partition.
    """
    if mode not in MODES:
        raise UsageError(f"unknown expansion mode {mode!r}")
    idx = [as_index(i) for i in indices]
    if not idx:
        raise UsageError("cluster expansion needs at least one index")
    if len(set(idx)) != len(idx):
        raise StructuralError("duplicate index in cluster expansion")
    idx.sort(key=index_key)
    n = len(idx)
    if n == 1:
        return [Density(tuple(idx))]
    if mode == "paper":
        terms = [Product(tuple(Density((i,)) for i in idx))]
        for k in range(2, n):
            for subset in combinations(range(n), k):
                rest = [Density((idx[j],)) for j in range(n) if j not in subset]
                terms.append(Product((*rest, Correlation(tuple(idx[j] for j in subset)))))
        terms.append(Correlation(tuple(idx)))
    else:
        parts = set_partitions(list(range(n)))
        parts = [sorted(sorted(b) for b in p) for p in parts]
        parts.sort(key=lambda p: (-len(p), sorted(len(b) for b in p), p))
        terms = [Product(tuple(_block([idx[j] for j in b]) for b in p)) for p in parts]
    return [canonicalize(t) for t in terms]


def _expand_arg(arg, mode: str) -> list:
    options = []
    for f in factors_of(arg):
        if isinstance(f, Density) and len(f.indices) > 1:
            options.append(cluster_expand(f.indices, mode))
        else:
            options.append([f])
    return [canonicalize(Product(tuple(choice))) for choice in cartesian(*options)]


def expand_commutator(term, mode: str = "paper") -> list[SignedTerm]:
    """Cluster-expand the argument of a (traced) commutator, term by term."""
    st = term if isinstance(term, SignedTerm) else SignedTerm(1, term)
    comm = st.term
    if not isinstance(comm, (Comm, TrComm)):
        raise UsageError("expand_commutator expects a Comm or TrComm")
    bound = comm.trace_index if isinstance(comm, TrComm) else None
    for f in factors_of(comm.arg):
        for i in f.indices:
            if isinstance(i, Family) and i != bound:
                raise UsageError(f"argument still holds the unbound family {i}")
    out = []
    for arg in _expand_arg(comm.arg, mode):
        out.append(SignedTerm(st.sign, canonicalize(replace(comm, arg=arg))))
    return out
