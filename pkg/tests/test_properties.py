"""Randomized checks of the selection against the brute-force oracle, with fixed seeds."""

import random
import re

import pytest

from adaimpact import (
    ChangeKind,
    CoverageMap,
    Entity,
    ImpactRelation,
    TokenKind,
    analyze,
    brute_closure,
    check_safety,
    diff,
    lex,
    parse_sources,
)
from adaimpact.selection import affected_tests, reached_entities

from .helpers import FIXTURES, fixture_coverage, fixture_sources

SEEDS = range(100)
FIXTURE_NAMES = ["fig3", "peano", "polymorphism", "small", "demo"]


def random_relation(rng):
    names = [f"p{index}" for index in range(rng.randint(1, 20))]
    entities = [Entity.spec(name) for name in names] + [Entity.body(name) for name in names]
    entities += [Entity.subprogram(f"{rng.choice(names)}.s{index}") for index in range(rng.randint(0, 160))]
    density = rng.uniform(0, 0.05)
    return ImpactRelation(
        {source: frozenset(target for target in entities if rng.random() < density) for source in entities}
    )


@pytest.mark.parametrize("seed", SEEDS)
def test_worklist_matches_dense_closure(seed):
    rng = random.Random(seed)
    impact = random_relation(rng)
    closure = brute_closure(impact)
    for start in impact.entities:
        assert reached_entities(start, impact) == closure.reachable(start)


def random_tree(rng):
    """A random acyclic tree of packages, each with a few procedures, plus a random coverage."""
    sources = {}
    subprograms = []
    count = rng.randint(1, 6)
    for index in range(count):
        name = f"P{index}"
        lower = [f"P{other}" for other in range(index)]
        spec_withs = rng.sample(lower, rng.randint(0, len(lower)))
        body_withs = rng.sample(lower, rng.randint(0, len(lower)))
        procedures = [f"S{number}" for number in range(rng.randint(0, 4))]
        subprograms += [f"p{index}.{procedure.lower()}" for procedure in procedures]

        spec = [f"with {withed};" for withed in spec_withs]
        spec.append(f"package {name} is")
        spec += [f"   procedure {procedure};" for procedure in procedures]
        spec.append(f"end {name};")
        sources[f"p{index}.ads"] = "\n".join(spec) + "\n"

        body = [f"with {withed};" for withed in body_withs]
        body += [f"package body {name} is", "   Counter : Integer := 0;"]
        for number, procedure in enumerate(procedures):
            body += [f"   procedure {procedure} is", "   begin", f"      Counter := {number};", f"   end {procedure};"]
        body.append(f"end {name};")
        sources[f"p{index}.adb"] = "\n".join(body) + "\n"

    tests = {f"t{number}": rng.sample(subprograms, rng.randint(0, len(subprograms))) for number in range(8)}
    return sources, CoverageMap.from_tests(tests)


def _package_name(path):
    return path.rsplit(".", 1)[0].upper()


def _procedures(text):
    return re.findall(r"^   procedure (\w+) is$", text, flags=re.MULTILINE)


def _add_package(rng, sources):
    number = 0
    while f"added{number}.ads" in sources:
        number += 1
    name = f"ADDED{number}"
    withs = [f"with {_package_name(path)};\n" for path in sorted(sources) if path.endswith(".ads")]
    context = "".join(rng.sample(withs, min(len(withs), 1)))
    return {
        **sources,
        f"added{number}.ads": f"{context}package {name} is\n   procedure Run;\nend {name};\n",
        f"added{number}.adb": (
            f"package body {name} is\n   procedure Run is\n   begin\n      null;\n   end Run;\nend {name};\n"
        ),
    }


def random_edit(rng, sources):
    bodies = sorted(path for path in sources if path.endswith(".adb"))
    if not bodies:
        return _add_package(rng, sources)
    path = rng.choice(bodies)
    spec = path[: -len(".adb")] + ".ads"
    name = _package_name(path)
    text = sources[path]
    procedures = _procedures(text)
    choice = rng.randrange(9)
    if choice == 0 and "Counter := " in text:
        statements = [line for line in text.splitlines() if line.startswith("      Counter := ")]
        line = rng.choice(statements)
        text = text.replace(line, line.replace(";", " + 1;"), 1)
    elif choice == 1:
        text = text.replace("Counter : Integer := 0;", "Counter : Integer := 5;")
    elif choice == 2:
        text = text.replace(f"end {name};", f"   procedure Extra is\n   begin\n      null;\n   end Extra;\nend {name};")
    elif choice == 3:
        sources = {**sources, spec: sources[spec].replace(" is\n", " is\n   procedure Declared;\n", 1)}
    elif choice == 4 and procedures:
        removed = rng.choice(procedures)
        block = rf"   procedure {removed} is\n   begin\n.*?\n   end {removed};\n"
        text = re.sub(block, "", text, count=1, flags=re.DOTALL)
        sources = {**sources, spec: sources[spec].replace(f"   procedure {removed};\n", "", 1)}
    elif choice == 5 and procedures:
        renamed = rng.choice(procedures)
        text = re.sub(rf"\b{renamed}\b", f"{renamed}_Renamed", text)
        sources = {**sources, spec: re.sub(rf"\b{renamed}\b", f"{renamed}_Renamed", sources[spec])}
    elif choice == 6:
        return _add_package(rng, sources)
    elif choice == 7:
        return {other: source for other, source in sources.items() if other not in (path, spec)}
    elif choice == 8:
        # only lower-numbered packages are withed, which keeps the specifications acyclic
        index = int(name[1:]) if re.fullmatch(r"P\d+", name) else len(sources)
        target = rng.choice([path, spec])
        withs = re.findall(r"^with (P\d+);$", sources[target], flags=re.MULTILINE)
        if withs and rng.random() < 0.5:
            edited = sources[target].replace(f"with {rng.choice(withs)};\n", "", 1)
        elif index > 0:
            edited = f"with P{rng.randrange(min(index, 6))};\n" + sources[target]
        else:
            edited = sources[target]
        sources = {**sources, target: edited}
        if target == path:
            text = edited
    return {**sources, path: text}


@pytest.mark.parametrize("seed", SEEDS)
def test_random_edits_are_safe(seed):
    rng = random.Random(seed)
    sources, coverage = random_tree(rng)
    edited = sources
    for _ in range(rng.randint(1, 3)):
        edited = random_edit(rng, edited)
    analysis = analyze(parse_sources(sources), parse_sources(edited), coverage)
    verdict = check_safety(analysis.selection, analysis.changes, analysis.impact, coverage)
    assert verdict.is_safe
    assert verdict.is_valid


def test_random_edits_cover_every_change_kind():
    kinds = set()
    for seed in SEEDS:
        rng = random.Random(seed)
        sources, _ = random_tree(rng)
        edited = sources
        for _ in range(rng.randint(1, 3)):
            edited = random_edit(rng, edited)
        kinds.update(change.kind for change in diff(parse_sources(sources), parse_sources(edited)))
    assert kinds == set(ChangeKind)


OPERATOR_SWAPS = {
    "+": "-",
    "-": "+",
    "*": "/",
    "/": "*",
    "<": ">",
    ">": "<",
    "<=": ">=",
    ">=": "<=",
    "=": "/=",
    "/=": "=",
    "&": "+",
}


def expression_tokens(tokens):
    """Literals and operators: editing them leaves the unit structure intact."""
    found = []
    for previous, token in zip([None, *tokens], tokens):
        if token.kind in (TokenKind.NUMBER, TokenKind.CHARACTER):
            found.append(token)
        elif token.kind == TokenKind.STRING:
            # operator symbols name subprograms
            if previous is None or not (previous.is_word("function", "end", "renames") or previous.is_delimiter(".")):
                found.append(token)
        elif token.kind == TokenKind.DELIMITER and token.value in OPERATOR_SWAPS:
            found.append(token)
    return found


def replacement(token, text):
    original = text[token.start : token.end]
    if token.kind == TokenKind.NUMBER:
        return "8" if token.value == "7" else "7"
    if token.kind == TokenKind.STRING:
        return '"zz_fuzz_2"' if original == '"zz_fuzz"' else '"zz_fuzz"'
    if token.kind == TokenKind.CHARACTER:
        char = original[1]
        if char.isalpha():
            return f"'{char.swapcase()}'"
        return "'R'" if char == "Q" else "'Q'"
    return f" {OPERATOR_SWAPS[token.value]} "


def token_edit(kind, token, text):
    if kind == "replace":
        middle = replacement(token, text)
    elif kind == "delete":
        middle = " "
    else:
        middle = "Zz_Fuzz " + text[token.start : token.end]
    return text[: token.start] + middle + text[token.end :]


@pytest.mark.parametrize("kind", ["replace", "delete", "insert"])
@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_token_edits_are_detected(name, kind):
    sources = fixture_sources(name)
    base = parse_sources(sources)
    candidates = [(path, token) for path in sorted(sources) for token in expression_tokens(lex(sources[path]))]
    assert candidates
    rng = random.Random(f"{name}-{kind}")
    for _ in range(30):
        path, token = rng.choice(candidates)
        edited = {**sources, path: token_edit(kind, token, sources[path])}
        assert diff(base, parse_sources(edited)), f"{kind} of {token.value!r} at {path}:{token.line}"


def reindent(text):
    return text.replace("\n   ", "\n      ")


def add_blank_lines(text):
    return text.replace("\n", "\n\n")


def append_comments(text):
    return "\n".join(f"{line} -- trailing" if line.endswith(";") else line for line in text.splitlines()) + "\n"


def uppercase_identifiers(text):
    pieces = []
    position = 0
    for token in lex(text):
        if token.kind == TokenKind.IDENTIFIER:
            pieces += [text[position : token.start], text[token.start : token.end].upper()]
            position = token.end
    pieces.append(text[position:])
    return "".join(pieces)


@pytest.mark.parametrize("mutation", [reindent, add_blank_lines, append_comments, uppercase_identifiers])
@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_trivia_changes_nothing(name, mutation):
    sources = fixture_sources(name)
    edited = {path: mutation(text) for path, text in sources.items()}
    coverage = fixture_coverage(name) if (FIXTURES / name / "coverage.json").exists() else CoverageMap()
    analysis = analyze(parse_sources(sources), parse_sources(edited), coverage)
    assert not analysis.changes
    assert analysis.selection.selected_tests == ()
    assert affected_tests(analysis.changes, analysis.impact, coverage).per_change == {}
