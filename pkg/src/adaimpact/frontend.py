"""Extraction of package structure from a documented subset of Ada.

Supported: package specs and bodies, context clauses (`with`, `use`, `pragma`), generic packages,
generic and subprogram instantiations, procedures and functions (including nested ones, null
procedures and expression functions), nested packages, and task/protected constructs which are
kept opaque (folded into the residue of the enclosing unit).
"""

from __future__ import annotations

import enum
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path, PurePosixPath
from typing import Iterable, Mapping

from typing_extensions import Self

from .errors import AdaImpactError, ParseError, SourceError, TreeParseError
from .lexer import Token, TokenKind, decode_source, lex, normalize
from .models import PackageModel, SubprogramDecl, UnitModel
from .snapshot import Snapshot
from .types import HashAlgorithm, PackageName, QualifiedName, SubprogramKind, UnitKind

logger = logging.getLogger(__name__)

ADA_EXTENSIONS = (".ads", ".adb")

# keywords opening a construct closed by `end <keyword>`
_CONSTRUCT_KEYWORDS = frozenset({"if", "case", "loop", "select", "record"})
_END_QUALIFIERS = frozenset({"if", "case", "loop", "select", "record", "return"})


@dataclass(frozen=True)
class SourceUnit:
    """One compilation unit, as read from an `.ads`/`.adb` file."""

    path: str
    kind: UnitKind
    package_name: PackageName
    text: str

    @classmethod
    def from_text(cls, path: PurePosixPath | str, text: str) -> Self:
        path = str(PurePosixPath(path))
        header = _UnitHeader.read(lex(text, path), path)
        return cls(path=path, kind=header.kind, package_name=header.name, text=text)


class _TokenReader:
    def __init__(self, tokens: list[Token], path: str) -> None:
        self.tokens = tokens
        self.path = path
        self.position = 0

    def at_end(self) -> bool:
        return self.position >= len(self.tokens)

    def peek(self, offset: int = 0) -> Token:
        index = self.position + offset
        if index >= len(self.tokens):
            # sentinel matching no word and no delimiter
            line = self.tokens[-1].line if self.tokens else 1
            return Token(TokenKind.STRING, "", line, -1, -1)
        return self.tokens[index]

    def advance(self) -> Token:
        if self.at_end():
            raise ParseError("Unexpected end of file", self.peek().line, self.path)
        token = self.tokens[self.position]
        self.position += 1
        return token

    def expect_word(self, word: str) -> Token:
        token = self.peek()
        if not token.is_word(word):
            raise ParseError(f"Expected `{word}`, found `{token.value or 'end of file'}`", token.line, self.path)
        return self.advance()

    def read_name(self) -> str:
        """Read a (possibly dotted) name, or an operator symbol."""
        token = self.advance()
        if token.kind == TokenKind.STRING:
            return token.value.lower()
        if token.kind != TokenKind.IDENTIFIER or token.is_reserved:
            raise ParseError(f"Expected a name, found `{token.value}`", token.line, self.path)
        parts = [token.value]
        while self.peek().is_delimiter(".") and self.peek(1).kind == TokenKind.IDENTIFIER:
            self.advance()
            parts.append(self.advance().value)
        return ".".join(parts)

    def read_name_list(self) -> list[str]:
        names = [self.read_name()]
        while self.peek().is_delimiter(","):
            self.advance()
            names.append(self.read_name())
        if not self.peek().is_delimiter(";"):
            raise ParseError(f"Expected `;`, found `{self.peek().value}`", self.peek().line, self.path)
        self.advance()
        return names

    def skip_to_semicolon(self) -> int:
        """Skip up to and including the next `;` outside parentheses, return the index of that `;`."""
        depth = 0
        while not self.at_end():
            token = self.advance()
            if token.is_delimiter("("):
                depth += 1
            elif token.is_delimiter(")"):
                depth -= 1
            elif token.is_delimiter(";") and depth <= 0:
                return self.position - 1
        raise ParseError("Unexpected end of file, missing `;`", self.peek().line, self.path)


@dataclass(frozen=True)
class _UnitHeader:
    kind: UnitKind
    name: PackageName
    withs: frozenset[PackageName]
    limited_withs: frozenset[PackageName]
    # index of the first token of the package content, None for instantiations and renamings
    content_start: int | None

    @classmethod
    def read(cls, tokens: list[Token], path: str) -> Self:
        reader = _TokenReader(tokens, path)
        withs: set[PackageName] = set()
        limited: set[PackageName] = set()

        # context clause
        while not reader.at_end():
            token = reader.peek()
            if token.is_word("limited", "private") and reader.peek(1).is_word("limited", "private", "with"):
                is_limited = False
                while reader.peek().is_word("limited", "private"):
                    is_limited = is_limited or reader.advance().value == "limited"
                reader.expect_word("with")
                names = reader.read_name_list()
                (limited if is_limited else withs).update(names)
            elif token.is_word("with"):
                reader.advance()
                withs.update(reader.read_name_list())
            elif token.is_word("use", "pragma"):
                reader.skip_to_semicolon()
            else:
                break

        if reader.at_end():
            raise ParseError("Expected a package declaration", path=path)
        if reader.peek().is_word("private"):
            reader.advance()
        if reader.peek().is_word("separate"):
            raise ParseError("Separate subunits are not supported", reader.peek().line, path)
        if reader.peek().is_word("procedure", "function"):
            raise ParseError("Library-level subprogram units are not supported", reader.peek().line, path)
        if reader.peek().is_word("generic"):
            reader.advance()
            # generic formal part: each item ends with `;`, the unit starts at a bare `package`
            while not reader.at_end() and not reader.peek().is_word("package"):
                if reader.peek().is_word("procedure", "function"):
                    raise ParseError("Generic subprogram units are not supported", reader.peek().line, path)
                reader.skip_to_semicolon()

        reader.expect_word("package")
        kind = UnitKind.SPEC
        if reader.peek().is_word("body"):
            reader.advance()
            kind = UnitKind.BODY
        name = reader.read_name()

        if reader.peek().is_word("renames"):
            reader.advance()
            withs.add(reader.read_name())
            reader.skip_to_semicolon()
            return cls(kind, name, frozenset((withs | limited) - {name}), frozenset(limited - withs - {name}), None)

        # aspects may come before `is`
        while not reader.at_end() and not reader.peek().is_word("is"):
            reader.advance()
        reader.expect_word("is")

        if reader.peek().is_word("separate"):
            raise ParseError("Separate subunits are not supported", reader.peek().line, path)
        if reader.peek().is_word("new"):
            reader.advance()
            withs.add(reader.read_name())
            reader.skip_to_semicolon()
            return cls(kind, name, frozenset((withs | limited) - {name}), frozenset(limited - withs - {name}), None)

        return cls(kind, name, frozenset(withs | limited), frozenset(limited - withs), reader.position)


class _FrameKind(str, enum.Enum):
    PACKAGE = "package"
    SUBPROGRAM = "subprogram"
    OPAQUE = "opaque"  # task, protected, entry body
    BLOCK = "block"
    CONSTRUCT = "construct"  # if, case, loop, select, record, do


@dataclass
class _Frame:
    kind: _FrameKind
    name: str | None
    awaiting_begin: bool
    start: int
    # set for subprograms recorded as entities
    qualified_name: QualifiedName | None = None
    subprogram_kind: SubprogramKind | None = None
    statements_offset: int | None = None


class _UnitParser:
    """Walks the content of a package, matching constructs on a stack of frames."""

    def __init__(self, unit: SourceUnit, tokens: list[Token], header: _UnitHeader, algorithm: HashAlgorithm) -> None:
        self.unit = unit
        self.tokens = tokens
        self.header = header
        self.algorithm = algorithm
        self.reader = _TokenReader(tokens, unit.path)
        self.frames: list[_Frame] = []
        # inclusive token index ranges of the recorded subprograms
        self.recorded: list[tuple[int, int, _Frame]] = []
        self.declarations: set[QualifiedName] = set()
        self.instantiated: set[PackageName] = set()

    @property
    def is_body(self) -> bool:
        return self.unit.kind == UnitKind.BODY

    def error(self, message: str, token: Token | None = None) -> ParseError:
        line = token.line if token is not None else self.reader.peek().line
        subprogram = next((frame.name for frame in reversed(self.frames) if frame.kind == _FrameKind.SUBPROGRAM), None)
        return ParseError(message, line, self.unit.path, subprogram)

    def package_context(self) -> list[str] | None:
        """Names of the enclosing packages, None unless only package declarative parts enclose us."""
        if any(frame.kind != _FrameKind.PACKAGE or not frame.awaiting_begin for frame in self.frames):
            return None
        return [frame.name or "" for frame in self.frames]

    def parse(self) -> None:
        reader = self.reader
        if self.header.content_start is None:
            return
        reader.position = self.header.content_start
        self.frames.append(_Frame(_FrameKind.PACKAGE, self.header.name, True, reader.position))
        depth = 0
        previous: Token | None = None

        while self.frames:
            if reader.at_end():
                frame = self.frames[-1]
                raise self.error(f"Unexpected end of file, `{frame.name or frame.kind.value}` is not closed")
            index = reader.position
            token = reader.advance()

            if token.is_delimiter("("):
                depth += 1
            elif token.is_delimiter(")"):
                depth -= 1
            elif depth > 0 or token.kind != TokenKind.IDENTIFIER:
                pass
            elif (
                previous is not None
                and previous.is_word("with", "access")
                and token.is_word("procedure", "function", "package", "protected")
            ):
                # generic formal subprograms and packages, access-to-subprogram types
                reader.skip_to_semicolon()
            elif token.is_word("procedure", "function"):
                self.subprogram_header(index, token)
            elif token.is_word("package"):
                self.package_header()
            elif token.is_word("task", "protected"):
                self.opaque_header()
            elif token.is_word("entry"):
                self.entry_header()
            elif token.is_word("declare"):
                self.frames.append(_Frame(_FrameKind.BLOCK, None, True, index))
            elif token.is_word("begin"):
                self.begin(index, token)
            elif token.is_word(*_CONSTRUCT_KEYWORDS):
                if not (token.is_word("record") and previous is not None and previous.is_word("null")):
                    self.frames.append(_Frame(_FrameKind.CONSTRUCT, token.value, False, index))
            elif token.is_word("do"):
                self.frames.append(_Frame(_FrameKind.CONSTRUCT, "do", False, index))
            elif token.is_word("end"):
                self.end(token)
                previous = None
                continue
            elif token.is_word("separate"):
                raise self.error("Separate subunits are not supported", token)

            previous = token

        if not reader.at_end():
            raise self.error(f"Unexpected `{reader.peek().value}` after the end of package {self.header.name}")

    def _scan_profile(self) -> Token:
        """Skip a parameter profile, stop on (and consume) `is`, `renames` or `;` outside parentheses."""
        depth = 0
        while not self.reader.at_end():
            token = self.reader.advance()
            if token.is_delimiter("("):
                depth += 1
            elif token.is_delimiter(")"):
                depth -= 1
            elif depth == 0 and (token.is_delimiter(";") or token.is_word("is", "renames")):
                return token
        raise self.error("Unexpected end of file in a declaration")

    def _declare(self, qualified_name: QualifiedName | None) -> None:
        if qualified_name is not None and not self.is_body:
            self.declarations.add(qualified_name)

    def subprogram_header(self, index: int, keyword: Token) -> None:
        reader = self.reader
        kind = SubprogramKind.PROCEDURE if keyword.value == "procedure" else SubprogramKind.FUNCTION
        name = reader.read_name()
        terminator = self._scan_profile()
        context = self.package_context()
        qualified_name = ".".join([*context, name]) if context is not None else None

        if terminator.is_word("renames"):
            reader.skip_to_semicolon()
        if not terminator.is_word("is"):
            self._declare(qualified_name)
            return

        following = reader.peek()
        if following.is_word("separate"):
            raise self.error("Separate subunits are not supported", following)
        if following.is_word("new"):
            reader.advance()
            self.instantiated.add(reader.read_name())
            reader.skip_to_semicolon()
            self._declare(qualified_name)
            return
        if following.is_word("abstract"):
            reader.skip_to_semicolon()
            self._declare(qualified_name)
            return
        if (following.is_word("null") and reader.peek(1).is_delimiter(";")) or following.is_delimiter("("):
            # null procedure or expression function, the declaration is the whole body
            end = reader.skip_to_semicolon()
            if self.is_body and qualified_name is not None:
                frame = _Frame(_FrameKind.SUBPROGRAM, name, False, index, qualified_name, kind)
                self.recorded.append((index, end, frame))
            self._declare(qualified_name)
            return

        self.frames.append(
            _Frame(
                _FrameKind.SUBPROGRAM,
                name,
                awaiting_begin=True,
                start=index,
                qualified_name=qualified_name if self.is_body else None,
                subprogram_kind=kind,
            )
        )

    def package_header(self) -> None:
        reader = self.reader
        if reader.peek().is_word("body"):
            reader.advance()
        name = reader.read_name()
        terminator = self._scan_profile()
        if terminator.is_word("renames"):
            reader.skip_to_semicolon()
            return
        if terminator.is_delimiter(";"):
            return
        following = reader.peek()
        if following.is_word("separate"):
            raise self.error("Separate subunits are not supported", following)
        if following.is_word("new"):
            reader.advance()
            self.instantiated.add(reader.read_name())
            reader.skip_to_semicolon()
            return
        self.frames.append(_Frame(_FrameKind.PACKAGE, name, True, reader.position))

    def opaque_header(self) -> None:
        reader = self.reader
        if reader.peek().is_word("body", "type"):
            reader.advance()
        name = reader.read_name()
        terminator = self._scan_profile()
        if terminator.is_word("renames"):
            reader.skip_to_semicolon()
            return
        if terminator.is_delimiter(";"):
            return
        following = reader.peek()
        if following.is_word("separate"):
            raise self.error("Separate subunits are not supported", following)
        if following.is_word("new"):
            # interface inheritance, `is new I with <items> end T;`
            reader.advance()
            reader.read_name()
            if not reader.peek().is_word("with"):
                reader.skip_to_semicolon()
                return
            reader.advance()
        self.frames.append(_Frame(_FrameKind.OPAQUE, name, True, reader.position))

    def entry_header(self) -> None:
        name = self.reader.read_name()
        if self._scan_profile().is_word("is"):
            self.frames.append(_Frame(_FrameKind.OPAQUE, name, True, self.reader.position))

    def begin(self, index: int, token: Token) -> None:
        frame = self.frames[-1]
        if frame.awaiting_begin:
            frame.awaiting_begin = False
            if frame.kind == _FrameKind.SUBPROGRAM:
                frame.statements_offset = token.end
            return
        self.frames.append(_Frame(_FrameKind.BLOCK, None, False, index))

    def end(self, token: Token) -> None:
        reader = self.reader
        frame = self.frames.pop()

        if reader.peek().is_word(*_END_QUALIFIERS):
            qualifier = reader.advance()
            if frame.kind != _FrameKind.CONSTRUCT:
                raise self.error(f"Unexpected `end {qualifier.value}`", qualifier)
            if qualifier.value != frame.name and not (qualifier.value == "return" and frame.name == "do"):
                raise self.error(f"`end {qualifier.value}` closes `{frame.name}`", qualifier)
        elif frame.kind == _FrameKind.CONSTRUCT and frame.name != "do":
            raise self.error(f"Missing `end {frame.name}`", token)

        if frame.kind == _FrameKind.SUBPROGRAM and frame.awaiting_begin:
            self.frames.append(frame)
            raise self.error(f"Missing `begin` before `end` of {frame.name}", token)

        end_name = None if reader.peek().is_delimiter(";") else reader.read_name()
        if not reader.peek().is_delimiter(";"):
            raise self.error(f"Expected `;` after `end`, found `{reader.peek().value}`", reader.peek())
        semicolon = reader.position
        reader.advance()

        if (
            end_name is not None
            and frame.kind in (_FrameKind.SUBPROGRAM, _FrameKind.PACKAGE, _FrameKind.OPAQUE)
            and end_name != frame.name
        ):
            self.frames.append(frame)
            raise self.error(f"`end {end_name}` does not match `{frame.name}`", token)

        if frame.kind == _FrameKind.SUBPROGRAM and frame.qualified_name is not None:
            self.recorded.append((frame.start, semicolon, frame))

    def build(self) -> UnitModel:
        tokens = self.tokens
        spans = sorted(self.recorded, key=lambda span: span[0])
        counts = Counter(frame.qualified_name for _, _, frame in spans)
        seen: Counter[str] = Counter()
        subprograms = []
        residue: list[Token] = []
        cursor = 0

        for start, end, frame in spans:
            assert frame.qualified_name is not None and frame.subprogram_kind is not None
            residue.extend(tokens[cursor:start])
            cursor = end + 1
            name = frame.qualified_name
            if counts[name] > 1:
                seen[name] += 1
                name = f"{name}#{seen[name]}"
            subprograms.append(
                SubprogramDecl(
                    qualified_name=name,
                    kind=frame.subprogram_kind,
                    body_span=(tokens[start].start, tokens[end].end),
                    normalized_hash=self.algorithm.hexdigest(normalize(tokens[start : end + 1])),
                    statements_offset=frame.statements_offset,
                )
            )
        residue.extend(tokens[cursor:])

        return UnitModel(
            path=self.unit.path,
            kind=self.unit.kind,
            package_name=self.header.name,
            withs=frozenset((self.header.withs | self.instantiated) - {self.header.name}),
            limited_withs=self.header.limited_withs - self.instantiated - {self.header.name},
            subprograms=tuple(subprograms),
            declarations=frozenset(self.declarations),
            residue_hash=self.algorithm.hexdigest(normalize(residue)),
        )


def parse_unit(unit: SourceUnit, hash_algorithm: HashAlgorithm | None = None) -> UnitModel:
    """Parse one unit into its contribution to a PackageModel.

    Subprogram bodies are located at package level by `is ... begin ... end <name>;` matching, every
    token outside them feeds the residue hash.

    Raises:
        LexError: if the text does not lex.
        ParseError: on unbalanced constructs, mismatched `end` names or unsupported units.
    """
    tokens = lex(unit.text, unit.path)
    header = _UnitHeader.read(tokens, unit.path)
    if header.kind != unit.kind or header.name != unit.package_name:
        raise ParseError(
            f"Unit declares {header.kind} {header.name}, expected {unit.kind} {unit.package_name}", path=unit.path
        )
    parser = _UnitParser(unit, tokens, header, hash_algorithm or HashAlgorithm.get_default())
    parser.parse()
    return parser.build()


def _parse_source(path: str, text: str, algorithm: HashAlgorithm) -> UnitModel:
    return parse_unit(SourceUnit.from_text(path, text), algorithm)


def assemble_snapshot(units: Iterable[UnitModel], hash_algorithm: HashAlgorithm) -> Snapshot:
    """Merge unit contributions into a Snapshot.

    Raises:
        TreeParseError: when a package has two specs or two bodies.
    """
    specs: dict[PackageName, UnitModel] = {}
    bodies: dict[PackageName, UnitModel] = {}
    errors: list[AdaImpactError] = []
    for unit in sorted(units, key=lambda unit: unit.path):
        registry = specs if unit.kind == UnitKind.SPEC else bodies
        if (existing := registry.get(unit.package_name)) is not None:
            errors.append(
                ParseError(
                    f"Duplicate {unit.kind} for package {unit.package_name} (already defined in {existing.path})",
                    path=unit.path,
                )
            )
            continue
        registry[unit.package_name] = unit
    if errors:
        raise TreeParseError(errors)

    packages = {
        name: PackageModel.merge(specs.get(name), bodies.get(name)) for name in sorted(specs.keys() | bodies.keys())
    }
    snapshot = Snapshot(packages=packages, hash_algorithm=hash_algorithm)
    for name in sorted(snapshot.bodies_without_spec):
        logger.warning("Package body %s has no specification in the tree", name)
    for name in sorted(snapshot.external_dependencies):
        logger.info("External dependency: %s", name)
    return snapshot


def parse_sources(
    sources: Mapping[str, str],
    hash_algorithm: HashAlgorithm | None = None,
    jobs: int = 1,
) -> Snapshot:
    """Build a Snapshot from in-memory sources, keyed by relative path.

    Raises:
        TreeParseError: listing every unit that failed, or duplicate package definitions.
    """
    algorithm = hash_algorithm or HashAlgorithm.get_default()
    paths = sorted(sources)

    def parse_one(path: str) -> UnitModel | SourceError:
        try:
            return _parse_source(path, sources[path], algorithm)
        except SourceError as exc:
            return exc

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            results = list(executor.map(parse_one, paths))
    else:
        results = [parse_one(path) for path in paths]

    errors = [result for result in results if isinstance(result, SourceError)]
    if errors:
        raise TreeParseError(errors)
    return assemble_snapshot((result for result in results if isinstance(result, UnitModel)), algorithm)


def read_tree(root: Path | str) -> dict[str, str]:
    """Read every `.ads`/`.adb` file under `root`, keyed by posix path relative to `root`.

    Raises:
        TreeParseError: if some files are not valid UTF-8.
    """
    root = Path(root)
    if not root.is_dir():
        raise NotADirectoryError(f"Not a directory: {root}")
    sources: dict[str, str] = {}
    errors: list[AdaImpactError] = []
    for path in sorted(root.rglob("*")):
        if not path.is_file() or path.suffix.lower() not in ADA_EXTENSIONS:
            continue
        relative = path.relative_to(root).as_posix()
        try:
            sources[relative] = decode_source(path.read_bytes(), relative)
        except SourceError as exc:
            errors.append(exc)
    if errors:
        raise TreeParseError(errors)
    logger.debug("Read %d Ada unit(s) from %s", len(sources), root)
    return sources


def parse_tree(root: Path | str, hash_algorithm: HashAlgorithm | None = None, jobs: int = 1) -> Snapshot:
    """Parse every `.ads`/`.adb` file under `root` into a Snapshot.

    The result does not depend on the directory traversal order.

    Raises:
        TreeParseError: listing every unit that failed to parse, or duplicate package definitions.
    """
    return parse_sources(read_tree(root), hash_algorithm, jobs)


def replace_unit(snapshot: Snapshot, unit: UnitModel) -> Snapshot:
    """Copy of `snapshot` where one re-parsed unit replaces the previous one, the other unit being kept."""
    package = snapshot.packages.get(unit.package_name)
    if unit.kind == UnitKind.SPEC:
        updated = PackageModel.merge(unit, None)
        if package is not None:
            updated = replace(
                package,
                spec_withs=updated.spec_withs,
                spec_limited_withs=updated.spec_limited_withs,
                spec_residue_hash=unit.residue_hash,
                spec_declarations=unit.declarations,
                spec_path=unit.path,
            )
    else:
        updated = PackageModel.merge(None, unit)
        if package is not None:
            updated = replace(
                package,
                body_withs=updated.body_withs,
                subprograms=unit.subprograms,
                body_residue_hash=unit.residue_hash,
                body_path=unit.path,
            )
    return Snapshot(
        packages={**snapshot.packages, unit.package_name: updated},
        hash_algorithm=snapshot.hash_algorithm,
        created=snapshot.created,
    )
