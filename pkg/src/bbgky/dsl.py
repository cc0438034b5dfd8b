"""Line-oriented system description language (``.bbgky`` files).

::

    # System 2
    single A1
    family B F
    interact A1 F
    interact B F
    derive F1 F2 B1

``family`` and ``single`` take one or more names, ``interact`` exactly two
(order fixes the operator's index order), ``derive`` one or more labels.
Everything after ``#`` is a comment.
"""
from __future__ import annotations

import re

from .deriver import SystemSpec
from .errors import SpecParseError, SpecificationError
from .ir import PairedIndex, as_index

_LETTER = re.compile(r"[A-Z]")
_LABEL = re.compile(r"[A-Z][1-9][0-9]*")
DIRECTIVES = ("family", "single", "interact", "derive")


def _tokens(line: str):
    line = line.split("#", 1)[0]
    for m in re.finditer(r"\S+", line):
        yield m.group(), m.start() + 1


def parse_spec(text: str) -> tuple[SystemSpec, list[tuple]]:
    families: dict[str, tuple] = {}
    singles: dict[str, tuple] = {}
    pairs: list = []
    targets: list = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        toks = list(_tokens(line))
        if not toks:
            continue
        (word, col), args = toks[0], toks[1:]
        if word not in DIRECTIVES:
            raise SpecParseError(f"unknown directive {word!r}", lineno, col)
        if not args:
            raise SpecParseError(f"{word} needs at least one argument", lineno, col + len(word))
        if word == "family":
            for name, c in args:
                if not _LETTER.fullmatch(name):
                    raise SpecParseError(f"malformed family name {name!r}", lineno, c)
                if name in families:
                    raise SpecParseError(f"family {name} declared twice", lineno, c)
                clash = [s for s in singles if s[0] == name]
                if clash:
                    raise SpecParseError(
                        f"family {name} clashes with the single {clash[0]}", lineno, c)
                families[name] = (lineno, c)
        elif word == "single":
            for name, c in args:
                if not _LABEL.fullmatch(name):
                    raise SpecParseError(f"malformed single label {name!r}", lineno, c)
                if name in singles:
                    raise SpecParseError(f"single {name} declared twice", lineno, c)
                if name[0] in families:
                    raise SpecParseError(
                        f"single {name} clashes with the family {name[0]}", lineno, c)
                singles[name] = (lineno, c)
        elif word == "interact":
            if len(args) != 2:
                raise SpecParseError("interact takes exactly two names", lineno, col)
            for name, c in args:
                if name not in families and name not in singles:
                    if _LETTER.fullmatch(name) or _LABEL.fullmatch(name):
                        raise SpecParseError(f"undeclared name {name!r}", lineno, c)
                    raise SpecParseError(f"malformed name {name!r}", lineno, c)
            (a, _), (b, cb) = args
            if a[0] == b[0]:
                raise SpecParseError(
                    f"interaction {a} {b} connects the same subsystem type", lineno, cb)
            key = frozenset((a, b))
            if any(frozenset(p) == key for p, _ in pairs):
                raise SpecParseError(f"duplicate interaction {a} {b}", lineno, col)
            pairs.append(((a, b), (lineno, col)))
        else:
            for name, c in args:
                if not _LABEL.fullmatch(name):
                    raise SpecParseError(f"malformed target label {name!r}", lineno, c)
                if name not in singles and name[0] not in families:
                    raise SpecParseError(f"unknown subsystem {name}", lineno, c)
            names = [n for n, _ in args]
            if len(set(names)) != len(names):
                raise SpecParseError("repeated label in derivation target", lineno, col)
            targets.append(tuple(names))
    try:
        spec = SystemSpec(tuple(families), tuple(singles),
                          tuple(PairedIndex(as_index(a), as_index(b)) for (a, b), _ in pairs))
    except SpecificationError as exc:
        raise SpecParseError(str(exc), 1, 1) from None
    return spec, targets


def render_spec(spec: SystemSpec, targets=()) -> str:
    lines = []
    if spec.singles:
        lines.append("single " + " ".join(spec.singles))
    if spec.families:
        lines.append("family " + " ".join(spec.families))
    for pair in spec.interactions:
        lines.append(f"interact {pair.first.name} {pair.second.name}")
    for t in targets:
        lines.append("derive " + " ".join(t))
    return "\n".join(lines) + "\n"


def split_target(token: str) -> tuple:
    """``"A1F1"`` or ``"A1,F1"`` -> ``("A1", "F1")``."""
    cleaned = token.replace(",", "").replace(" ", "")
    labels = re.findall(r"[A-Z][0-9]+", cleaned)
    if not labels or "".join(labels) != cleaned:
        raise SpecificationError(f"malformed target {token!r}")
    return tuple(labels)
