import json
from itertools import combinations

import numpy as np
import pytest

from bbgky.deriver import SystemSpec, derive
from bbgky.errors import StructuralError, UsageError
from bbgky.ir import Comm, Equation, Family, PairedIndex, Product, SignedTerm, Single, V, g, rho
from bbgky.oracle import (
    ConcreteSystem, Evaluator, align, check_equation, evaluate_term, partial_trace,
)


@pytest.fixture(scope="module")
def sys1(system1):
    return ConcreteSystem.random(system1, seed=3)


def test_state_is_a_density_matrix(sys1):
    r = sys1.rho
    assert np.allclose(r, r.conj().T, atol=1e-14)
    assert abs(np.trace(r) - 1) < 1e-12
    assert np.linalg.eigvalsh(r).min() > -1e-12
    for m in sys1.couplings.values():
        assert np.allclose(m, m.conj().T)


def test_instance_is_read_only(sys1):
    with pytest.raises(ValueError):
        sys1.rho[0, 0] = 1.0


def test_seed_reproducible(system1):
    a = ConcreteSystem.random(system1, seed=11)
    b = ConcreteSystem.random(system1, seed=11)
    c = ConcreteSystem.random(system1, seed=12)
    assert np.array_equal(a.rho, b.rho)
    assert not np.allclose(a.rho, c.rho)


def test_members_cover_targets(system1):
    s = ConcreteSystem.random(system1, members=2, targets=[("F1", "F2", "F3")])
    assert s.members["F"] == ("F1", "F2", "F3", "F4")


def test_dimension_below_two_rejected(system1):
    with pytest.raises(UsageError):
        ConcreteSystem.random(system1, dims=1)


def test_product_is_tensor_product(sys1):
    op = evaluate_term(Product((rho("A1"), rho("F1"))), sys1)
    a = partial_trace(sys1.rho, sys1.sites, sys1.dims, ("A1",))
    f = partial_trace(sys1.rho, sys1.sites, sys1.dims, ("F1",))
    assert np.allclose(align(op.mat, op.sites, ("A1", "F1"), sys1.dims), np.kron(a, f))


def test_pair_correlation_definition(sys1):
    op = evaluate_term(g("A1", "F1"), sys1)
    fa = partial_trace(sys1.rho, sys1.sites, sys1.dims, ("A1",))
    ff = partial_trace(sys1.rho, sys1.sites, sys1.dims, ("F1",))
    faf = partial_trace(sys1.rho, sys1.sites, sys1.dims, ("A1", "F1"))
    assert np.allclose(align(op.mat, op.sites, ("A1", "F1"), sys1.dims), faf - np.kron(fa, ff))
    assert np.abs(partial_trace(op.mat, op.sites, sys1.dims, ())).max() < 1e-12


@pytest.mark.parametrize("mode", ["paper", "ursell"])
def test_reduced_and_correlation_invariants(sys1, mode):
    ev = Evaluator(sys1, mode)
    labels = sys1.sites
    for n in range(1, 5):
        for key in combinations(labels, n):
            f, fdot = ev.reduced(key)
            assert np.allclose(f, f.conj().T, atol=1e-12)
            assert abs(np.trace(f) - 1) < 1e-12
            assert abs(np.trace(fdot)) < 1e-12
            if n < 2:
                continue
            gv, gd = ev.correlation(key)
            for drop in key:
                keep = tuple(x for x in ev._canon(key) if x != drop)
                for m in (gv, gd):
                    assert np.abs(partial_trace(m, ev._canon(key), sys1.dims, keep)).max() < 1e-12


def test_time_derivative_matches_finite_difference(system1):
    s = ConcreteSystem.random(system1, seed=5)
    ev = Evaluator(s, "ursell")
    h = s.total_interaction()
    w, u = np.linalg.eigh(h)
    dt = 1e-6

    def rho_at(t):
        step = (u * np.exp(-1j * w * t)) @ u.conj().T
        return step @ s.rho @ step.conj().T

    num = (rho_at(dt) - rho_at(-dt)) / (2 * dt)
    want = partial_trace(num, s.sites, s.dims, ("A1", "F1"))
    assert np.allclose(ev.reduced(("A1", "F1"))[1], want, atol=1e-8)


def test_first_equation_residual(system1):
    s = ConcreteSystem.random(system1, seed=0, members=2)
    report = check_equation(derive(system1, ["A1"]), s, tol=1e-10)
    assert report.passed and report.residual <= 1e-10
    json.dumps(report.to_dict())


def test_sign_flip_is_detected(system1):
    s = ConcreteSystem.random(system1, seed=0)
    eq = derive(system1, ["A1", "F1"])
    flipped = Equation(eq.lhs, (eq.rhs[0].negated(),) + eq.rhs[1:], eq.expansion)
    report = check_equation(flipped, s)
    assert not report.passed and report.residual > 1e-3


def test_empty_rhs_fails_when_lhs_moves(sys1):
    report = check_equation(Equation(rho("A1", deriv=True), ()), sys1)
    assert report.term_norms == []
    assert not report.passed


def test_zero_equation():
    # A1 couples to nothing, so its density matrix is frozen
    spec = SystemSpec(("F",), ("A1", "C1"), (PairedIndex(Single("C1"), Family("F")),))
    eq = derive(spec, ["A1"])
    assert eq.rhs == ()
    report = check_equation(eq, ConcreteSystem.random(spec, seed=1))
    assert report.residual < 1e-14 and report.passed
    assert report.note


def test_support_mismatch(sys1):
    bad = Equation(rho("A1", deriv=True), (SignedTerm(1, Comm(V("A1", "F1"), rho("A1", "F1"))),))
    with pytest.raises(StructuralError):
        check_equation(bad, sys1)


def test_larger_local_dimension(system1):
    s = ConcreteSystem.random(system1, dims=3, seed=2)
    for t in (["A1"], ["A1", "F1"], ["F1", "F2"]):
        assert check_equation(derive(system1, t), s).passed
