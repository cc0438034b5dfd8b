from pathlib import Path

import pytest

from bbgky.dsl import parse_spec
from bbgky.deriver import derive
from bbgky.ir import (
    Comm, Equation, Family, InteractionOp, Mixed, ONE, PairedIndex, Product, SignedTerm,
    Single, TrComm, ZERO, V, g, rho,
)
from bbgky.render import display, latex, to_latex

from golden_equations import GOLDEN, SPEC

GOLDEN_DIR = Path(__file__).parent / "golden"
F = Family("F")

NOTATION = [
    (ZERO, "0"),
    (ONE, "1"),
    (Family("F", frozenset({"F1"})), "sum_{F}/F1"),
    (PairedIndex(Single("A1"), F), "{A1, sum_{F}}"),
    (rho("A1", F), "rho_A1{F}"),
    (g("A1", "F1", deriv=True), "i hbar d/dt g_A1F1"),
    (Product((rho("A1"), g("A2", "F1"))), "rho_A1 * g_A2F1"),
    (InteractionOp(PairedIndex(Single("A1"), F)), "sum_{F} V_A1F"),
    (Comm(V("A1", "B1"), g("A1", "B1")), "[ V_A1B1, g_A1B1 ]"),
    (TrComm(V("A1", F), F, g("A1", F)), "sum_{F} Tr_F [V_A1F, g_A1F]"),
    (Mixed((rho("F1"),), TrComm(V("A1", "F1"), Single("F1"), rho("A1", "F1"))),
     "rho_F1 * Tr_F1 [V_A1F1, rho_A1F1]"),
]


@pytest.mark.parametrize("node, text", NOTATION, ids=[t for _, t in NOTATION])
def test_display_table(node, text):
    assert display(node) == text


def test_display_excluded_block():
    assert display(rho("A1", Family("F", frozenset({"F1", "F2"})))) == "rho_A1{F/F1F2}"


def test_display_equation_signs():
    t = Comm(V("A1", "F1"), g("A1", "F1"))
    eq = Equation(g("A1", "F1", deriv=True), (SignedTerm(-1, t), SignedTerm(1, t), SignedTerm(-1, t)))
    assert display(eq) == ("i hbar d/dt g_A1F1 = -[ V_A1F1, g_A1F1 ] + [ V_A1F1, g_A1F1 ]"
                           " - [ V_A1F1, g_A1F1 ]")


def test_empty_rhs():
    eq = Equation(rho("A1", deriv=True), ())
    assert display(eq).endswith("= 0")
    assert to_latex(eq).endswith("= 0")


@pytest.fixture(scope="module")
def golden_spec():
    return parse_spec(SPEC)[0]


def test_latex_of_single_emitter(golden_spec):
    text = to_latex(derive(golden_spec, ["A1"]))
    assert text.startswith("i\\hbar\\frac{d}{dt} \\rho_{A1} = ")
    assert "\\sum_{F} Tr_{F} [ V_{A1F} , \\rho_{A1}\\rho_{F} ]" in text


def test_latex_of_cross_correlation(golden_spec):
    rhs = to_latex(derive(golden_spec, ["A1", "B1"])).split(" = ", 1)[1]
    assert rhs.count(" + ") == 5 and " - " not in rhs


def test_latex_pieces():
    f = Family("F", frozenset({"F1"}))
    assert latex(TrComm(V("A1", f), f, g("A1", "F1", f))) == \
        "\\sum_{F/F1} Tr_{F} [ V_{A1F} , g_{A1F1F} ]"
    assert latex(Comm(V("A1", "F1"), g("A1", "F1"))) == "\\left[ V_{A1F1} , g_{A1F1} \\right]"
    assert latex(g("A1", "F1", deriv=True)) == "i\\hbar\\frac{d}{dt} g_{A1F1}"


@pytest.mark.parametrize("target", list(GOLDEN), ids=lambda t: "".join(t))
def test_golden_latex_is_byte_stable(golden_spec, target):
    expected = (GOLDEN_DIR / f"{''.join(target)}.tex").read_text()
    assert to_latex(derive(golden_spec, target)) + "\n" == expected


@pytest.mark.parametrize("target", list(GOLDEN), ids=lambda t: "".join(t))
def test_golden_files_hold_the_reference_terms(target):
    from texparse import multiset, parse_rhs
    rhs = (GOLDEN_DIR / f"{''.join(target)}.tex").read_text().split(" = ", 1)[1]
    assert multiset(parse_rhs(rhs)) == multiset(parse_rhs(GOLDEN[target]))
