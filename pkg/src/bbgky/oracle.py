"""Dense-matrix interpreter for the IR, used to check derived equations.

Every family is instantiated with a finite number of members, each
subsystem gets a small Hilbert space, every declared interaction pair gets
its own random Hermitian coupling, and the full state is a random Gibbs
state.  Time derivatives are exact at a single instant:
``i d(rho)/dt = [V, rho]`` (hbar = 1) pushed through partial traces, with
correlation matrices differentiated by forward-mode (dual number) algebra.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping

import numpy as np

from .cluster import MODES, set_partitions
from .deriver import SystemSpec
from .errors import StructuralError, UsageError
from .ir import (
    Comm, Correlation, Density, Equation, Family, Mixed, One, Product,
    Single, TrComm, Zero, ordinal,
)

DEFAULT_MEMBERS = 3
DEFAULT_DIM = 2


@dataclass(frozen=True)
class Op:
    """Dense operator on an ordered tuple of subsystem labels."""
    sites: tuple
    mat: np.ndarray


def _shape(sites, dims):
    return [dims[s] for s in sites]


def partial_trace(mat: np.ndarray, sites: tuple, dims: Mapping, keep) -> np.ndarray:
    """Trace ``mat`` (on ``sites``) down to ``keep``, returned in ``keep`` order."""
    n = len(sites)
    t = mat.reshape(_shape(sites, dims) * 2)
    pos = {s: k for k, s in enumerate(sites)}
    rows = list(range(n))
    cols = list(range(n, 2 * n))
    for s in sites:
        if s not in keep:
            cols[pos[s]] = rows[pos[s]]
    out = [rows[pos[s]] for s in keep] + [cols[pos[s]] for s in keep]
    d = int(np.prod(_shape(keep, dims))) if keep else 1
    return np.einsum(t, rows + cols, out).reshape(d, d)


def align(mat: np.ndarray, sites: tuple, order: tuple, dims: Mapping) -> np.ndarray:
    """Reorder the tensor factors of ``mat`` from ``sites`` to ``order``."""
    if tuple(sites) == tuple(order):
        return mat
    if sorted(sites) != sorted(order):
        raise StructuralError(f"cannot align {sites} to {order}")
    n = len(sites)
    t = mat.reshape(_shape(sites, dims) * 2)
    perm = [sites.index(s) for s in order]
    t = t.transpose(perm + [p + n for p in perm])
    d = mat.shape[0]
    return t.reshape(d, d)


def embed(op: Op, order: tuple, dims: Mapping) -> np.ndarray:
    """Extend ``op`` by identities to the sites ``order``."""
    extra = tuple(s for s in order if s not in op.sites)
    mat = op.mat
    if extra:
        mat = np.kron(mat, np.eye(int(np.prod(_shape(extra, dims)))))
    return align(mat, op.sites + extra, tuple(order), dims)


def random_hermitian(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (x + x.conj().T) / (2 * np.sqrt(d))


@dataclass(frozen=True)
class ConcreteSystem:
    spec: SystemSpec
    members: Mapping  # family letter -> member labels
    dims: Mapping  # label -> local dimension
    sites: tuple
    couplings: Mapping  # (u, v) in declared order -> matrix on u (x) v
    rho: np.ndarray
    seed: int

    @classmethod
    def random(cls, spec: SystemSpec, members=DEFAULT_MEMBERS, dims=DEFAULT_DIM,
               seed: int = 0, targets=(), coupling: float = 1.0,
               beta: float = 1.0, one_body: float = 1.0,
               two_body: float = 1.0) -> ConcreteSystem:
        """Random instance large enough for every label in ``targets``.

        ``members`` and ``dims`` are an int or a per-letter mapping.  Each
        family gets at least one member beyond the largest targeted ordinal,
        so that every excluded sum stays non-empty.
        """
        rng = np.random.default_rng(seed)
        count = {}
        for f in spec.families:
            n = members.get(f, DEFAULT_MEMBERS) if isinstance(members, Mapping) else members
            need = [ordinal(l) for t in targets for l in t if l[0] == f]
            n = max(n, max(need, default=0) + 1, 1)
            count[f] = n
        member_map = {f: tuple(f"{f}{k}" for k in range(1, count[f] + 1)) for f in spec.families}
        sites = tuple(spec.singles) + tuple(m for f in spec.families for m in member_map[f])

        def dim_of(label):
            d = dims.get(label[0], DEFAULT_DIM) if isinstance(dims, Mapping) else dims
            if d < 2:
                raise UsageError("local dimensions must be at least 2")
            return int(d)

        dim_map = {s: dim_of(s) for s in sites}
        couplings = {}
        for pair in spec.interactions:
            us = member_map[pair.first.name] if isinstance(pair.first, Family) else (pair.first.name,)
            vs = member_map[pair.second.name] if isinstance(pair.second, Family) else (pair.second.name,)
            for u in us:
                for v in vs:
                    m = random_hermitian(rng, dim_map[u] * dim_map[v], coupling)
                    m.setflags(write=False)
                    couplings[(u, v)] = m
        rho = _random_gibbs(rng, sites, dim_map, beta, one_body, two_body)
        rho.setflags(write=False)
        return cls(spec, member_map, dim_map, sites, couplings, rho, seed)

    @property
    def dimension(self) -> int:
        return self.rho.shape[0]

    def total_interaction(self) -> np.ndarray:
        out = np.zeros_like(self.rho)
        for (u, v), m in self.couplings.items():
            out += embed(Op((u, v), m), self.sites, self.dims)
        return out

    def family_members(self, fam: Family) -> list:
        return [m for m in self.members[fam.name] if m not in fam.excluded]


def _random_gibbs(rng, sites, dims, beta, one_body, two_body):
    """exp(-beta H)/Z for H with random one-body terms and all two-body terms."""
    d = int(np.prod(_shape(sites, dims)))
    h = np.zeros((d, d), dtype=complex)
    for s in sites:
        h += embed(Op((s,), random_hermitian(rng, dims[s], one_body)), sites, dims)
    for a, b in combinations(sites, 2):
        h += embed(Op((a, b), random_hermitian(rng, dims[a] * dims[b], two_body)), sites, dims)
    w, u = np.linalg.eigh(h)
    p = np.exp(-beta * (w - w.min()))
    rho = (u * (p / p.sum())) @ u.conj().T
    return (rho + rho.conj().T) / 2


class Evaluator:
    """Evaluates IR terms on a concrete system.

    Correlation matrices are obtained by inverting the cluster expansion of
    ``mode``; each reduced object is carried as a (value, time derivative)
    pair.
    """

    def __init__(self, system: ConcreteSystem, mode: str = "ursell"):
        if mode not in MODES:
            raise UsageError(f"unknown expansion mode {mode!r}")
        self.sys = system
        self.mode = mode
        self.order = {s: k for k, s in enumerate(system.sites)}
        self._rho_dot = -1j * _commutator(system.total_interaction(), system.rho)
        self._f: dict = {}
        self._g: dict = {}

    # reduced matrices -------------------------------------------------
    def _canon(self, labels) -> tuple:
        missing = [l for l in labels if l not in self.order]
        if missing:
            raise StructuralError(f"labels {missing} are not instantiated")
        return tuple(sorted(labels, key=self.order.__getitem__))

    def _dual_kron(self, a, b):
        return np.kron(a[0], b[0]), np.kron(a[1], b[0]) + np.kron(a[0], b[1])

    def _dual_align(self, pair, sites, order):
        d = self.sys.dims
        return align(pair[0], sites, order, d), align(pair[1], sites, order, d)

    def reduced(self, labels) -> tuple:
        key = self._canon(labels)
        if key not in self._f:
            s = self.sys
            self._f[key] = (partial_trace(s.rho, s.sites, s.dims, key),
                            partial_trace(self._rho_dot, s.sites, s.dims, key))
        return self._f[key]

    def _block_product(self, blocks, order) -> tuple:
        acc, sites = None, ()
        for b in blocks:
            piece = self.correlation(b) if len(b) > 1 else self.reduced(b)
            acc = piece if acc is None else self._dual_kron(acc, piece)
            sites += tuple(b)
        return self._dual_align(acc, sites, order)

    def correlation(self, labels) -> tuple:
        key = self._canon(labels)
        if len(key) < 2:
            return self.reduced(key)
        if key in self._g:
            return self._g[key]
        val, dot = (x.copy() for x in self.reduced(key))
        if self.mode == "ursell":
            lower = [p for p in set_partitions(list(key)) if len(p) > 1]
        else:
            n = len(key)
            lower = [[[x] for x in key]]
            for k in range(2, n):
                for sub in combinations(key, k):
                    lower.append([[x] for x in key if x not in sub] + [list(sub)])
        for blocks in lower:
            bv, bd = self._block_product([self._canon(b) for b in blocks], key)
            val -= bv
            dot -= bd
        self._g[key] = (val, dot)
        return self._g[key]

    # terms ---------------------------------------------------------------
    def _labels(self, idx, env) -> list:
        if isinstance(idx, Single):
            return [idx.name]
        if idx.name in env:
            return [env[idx.name]]
        return self.sys.family_members(idx)

    def _factor(self, f, env) -> Op:
        labels = [l for i in f.indices for l in self._labels(i, env)]
        if isinstance(f, Correlation):
            if len(labels) != len(f.indices):
                raise StructuralError(f"correlation matrix with unbound family: {f}")
            pair = self.correlation(labels)
        else:
            pair = self.reduced(labels)
        key = self._canon(labels)
        mat = 1j * pair[1] if f.deriv else pair[0]
        return Op(key, mat)

    def _kron(self, ops) -> Op:
        sites, mat = (), np.ones((1, 1), dtype=complex)
        for op in ops:
            if set(sites) & set(op.sites):
                raise StructuralError("product factors act on a common subsystem")
            sites, mat = sites + op.sites, np.kron(mat, op.mat)
        return Op(sites, mat)

    def _add(self, acc, op):
        if op is None:
            return acc
        if acc is None:
            return op
        if set(acc.sites) != set(op.sites):
            raise StructuralError(f"adding operators on {acc.sites} and {op.sites}")
        return Op(acc.sites, acc.mat + align(op.mat, op.sites, acc.sites, self.sys.dims))

    def _vcomm(self, u, v, arg: Op) -> Op:
        coupling = self.sys.couplings.get((u, v))
        if coupling is None:
            raise StructuralError(f"no coupling declared between {u} and {v}")
        sites = arg.sites + tuple(x for x in (u, v) if x not in arg.sites)
        vm = embed(Op((u, v), coupling), sites, self.sys.dims)
        am = embed(arg, sites, self.sys.dims)
        return Op(sites, _commutator(vm, am))

    def _ptrace(self, op: Op, label) -> Op:
        keep = tuple(s for s in op.sites if s != label)
        return Op(keep, partial_trace(op.mat, op.sites, self.sys.dims, keep))

    def evaluate(self, term, env=None):
        """Dense value of ``term``; ``None`` stands for the zero operator."""
        env = env or {}
        if isinstance(term, Zero):
            return None
        if isinstance(term, One):
            return Op((), np.ones((1, 1), dtype=complex))
        if isinstance(term, (Density, Correlation)):
            return self._factor(term, env)
        if isinstance(term, Product):
            return self._kron([self._factor(f, env) for f in term.factors])
        if isinstance(term, Comm):
            arg = self.evaluate(term.arg, env)
            if arg is None:
                return None
            acc = None
            for u in self._labels(term.op.u, {}):
                for v in self._labels(term.op.v, {}):
                    acc = self._add(acc, self._vcomm(u, v, arg))
            return acc
        if isinstance(term, TrComm):
            t = term.trace_index
            first = t == term.op.u
            acc = None
            for m in self._labels(t, {}):
                inner = dict(env, **{t.name: m}) if isinstance(t, Family) else env
                arg = self.evaluate(term.arg, inner)
                if arg is None:
                    continue
                for p in self._labels(term.partner_index, {}):
                    u, v = (m, p) if first else (p, m)
                    acc = self._add(acc, self._ptrace(self._vcomm(u, v, arg), m))
            return acc
        if isinstance(term, Mixed):
            tail = self.evaluate(term.tail, env)
            if tail is None:
                return None
            return self._kron([self._factor(f, env) for f in term.factors] + [tail])
        raise StructuralError(f"cannot evaluate {term!r}")


def _commutator(a, b):
    return a @ b - b @ a


def evaluate_term(term, system: ConcreteSystem, mode: str = "ursell"):
    """Dense matrix of ``term`` on its support, as an :class:`Op` (or ``None`` for zero)."""
    return Evaluator(system, mode).evaluate(term)


@dataclass
class ResidualReport:
    target: tuple
    expansion: str
    seed: int
    residual: float
    lhs_norm: float
    tol: float
    passed: bool
    term_norms: list = field(default_factory=list)
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "target": list(self.target), "expansion": self.expansion,
            "seed": self.seed, "residual": self.residual, "lhs_norm": self.lhs_norm,
            "tol": self.tol, "passed": self.passed, "terms": len(self.term_norms),
            "term_norms": self.term_norms, "note": self.note,
        }


def residual_of(lhs: Op | None, parts, sites=None, dims=None, floor: float = 1e-12):
    """Relative residual ``|lhs - sum(sign * part)| / |lhs|``.

    Falls back to the absolute residual when ``|lhs|`` is below ``floor``.
    """
    acc = lhs.mat.copy() if lhs is not None else None
    ref = lhs.sites if lhs is not None else None
    for sign, op in parts:
        if op is None:
            continue
        if acc is None:
            acc, ref = np.zeros_like(op.mat), op.sites
        if set(op.sites) != set(ref):
            raise StructuralError(f"term acts on {op.sites}, equation on {ref}")
        acc = acc - sign * align(op.mat, op.sites, ref, dims)
    lhs_norm = float(np.linalg.norm(lhs.mat)) if lhs is not None else 0.0
    diff = float(np.linalg.norm(acc)) if acc is not None else 0.0
    return (diff / lhs_norm if lhs_norm >= floor else diff), lhs_norm


def check_equation(eq: Equation, system: ConcreteSystem, tol: float = 1e-8,
                   mode: str | None = None, evaluator: Evaluator | None = None) -> ResidualReport:
    """Compare both sides of ``eq`` on ``system``.

    Correlation matrices are defined through the equation's own expansion
    mode unless ``mode`` overrides it.
    """
    mode = mode or eq.expansion
    ev = evaluator if evaluator is not None and evaluator.mode == mode else Evaluator(system, mode)
    lhs = ev.evaluate(eq.lhs)
    parts = [(st.sign, ev.evaluate(st.term)) for st in eq.rhs]
    residual, lhs_norm = residual_of(lhs, parts, dims=system.dims)
    note = ""
    if lhs_norm < 1e-12:
        note = "lhs norm below 1e-12; residual is absolute"
    norms = [float(np.linalg.norm(op.mat)) if op is not None else 0.0 for _, op in parts]
    return ResidualReport(eq.target, mode, system.seed, residual, lhs_norm, tol,
                          bool(residual <= tol), norms, note)
