import pytest
from hypothesis import given, strategies as st

from bbgky.deriver import SystemSpec
from bbgky.dsl import parse_spec, render_spec, split_target
from bbgky.errors import SpecParseError, SpecificationError
from bbgky.ir import Family, PairedIndex, Single


def test_one_emitter_system():
    spec, targets = parse_spec("single A1\nfamily F\ninteract A1 F\n")
    assert spec.singles == ("A1",)
    assert spec.families == ("F",)
    assert spec.interactions == (PairedIndex(Single("A1"), Family("F")),)
    assert targets == []


def test_three_family_system():
    spec, _ = parse_spec("family A\nfamily B\nfamily F\ninteract A F\ninteract B F\n")
    assert spec.families == ("A", "B", "F")
    assert [(p.first.name, p.second.name) for p in spec.interactions] == [("A", "F"), ("B", "F")]


def test_comments_blank_lines_and_targets():
    text = "# header\n\nfamily F   # modes\nsingle A1\ninteract F A1\nderive A1 F1\nderive F2\n"
    spec, targets = parse_spec(text)
    assert spec.interactions[0].first == Family("F")
    assert targets == [("A1", "F1"), ("F2",)]


def test_directives_take_several_names():
    spec, _ = parse_spec("family A B F\nsingle C1 C2\n")
    assert spec.families == ("A", "B", "F")
    assert spec.singles == ("C1", "C2")


@pytest.mark.parametrize("text, line, col, fragment", [
    ("family A\ninteract A A\n", 2, 12, "same subsystem type"),
    ("family F\nfoo F\n", 2, 1, "unknown directive"),
    ("family F1\n", 1, 8, "malformed family"),
    ("single A\n", 1, 8, "malformed single"),
    ("single A0\n", 1, 8, "malformed single"),
    ("family F\ninteract A1 F\n", 2, 10, "undeclared"),
    ("family F\nsingle A1\ninteract A1 F\ninteract F A1\n", 4, 1, "duplicate interaction"),
    ("family F\ninteract F\n", 2, 1, "exactly two"),
    ("family F\nderive\n", 2, 7, "at least one"),
    ("family F\nderive X1\n", 2, 8, "unknown subsystem"),
    ("family F\nderive F1 F1\n", 2, 1, "repeated"),
    ("family F\nfamily F\n", 2, 8, "declared twice"),
    ("family A\nsingle A1\n", 2, 8, "clashes"),
    ("single A1\nfamily A\n", 2, 8, "clashes"),
    ("family F\nderive f1\n", 2, 8, "malformed target"),
])
def test_errors_are_positioned(text, line, col, fragment):
    with pytest.raises(SpecParseError) as info:
        parse_spec(text)
    err = info.value
    assert (err.line, err.column) == (line, col)
    assert fragment in err.message
    assert str(err).startswith(f"{line}:{col}: ")


def test_split_target():
    assert split_target("A1F1") == ("A1", "F1")
    assert split_target("A1,F12") == ("A1", "F12")
    with pytest.raises(SpecificationError):
        split_target("A1x")


letters = st.lists(st.sampled_from("ABCDEFGH"), min_size=1, max_size=5, unique=True)


@st.composite
def specs(draw):
    names = draw(letters)
    split = draw(st.integers(0, len(names)))
    families = tuple(names[:split])
    singles = tuple(f"{x}{draw(st.integers(1, 9))}" for x in names[split:])
    pool = list(families) + list(singles)
    pairs, seen = [], set()
    for _ in range(draw(st.integers(0, 4))):
        if len(pool) < 2:
            break
        a, b = draw(st.lists(st.sampled_from(pool), min_size=2, max_size=2, unique=True))
        if a[0] == b[0] or frozenset((a, b)) in seen:
            continue
        seen.add(frozenset((a, b)))
        pairs.append((a, b))
    to_idx = lambda x: Family(x) if len(x) == 1 else Single(x)
    spec = SystemSpec(families, singles, tuple(PairedIndex(to_idx(a), to_idx(b)) for a, b in pairs))
    labels = [f"{f}{k}" for f in families for k in (1, 2)] + list(singles)
    targets = draw(st.lists(st.lists(st.sampled_from(labels), min_size=1, max_size=3, unique=True)
                            .map(tuple), max_size=3)) if labels else []
    return spec, targets


@given(specs())
def test_round_trip(case):
    spec, targets = case
    assert parse_spec(render_spec(spec, targets)) == (spec, list(targets))
