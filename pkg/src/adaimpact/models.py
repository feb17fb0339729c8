from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

from typing_extensions import Self

from .errors import FileFormatError, SnapshotFormatError
from .types import PackageName, QualifiedName, Span, SubprogramKind, UnitKind


class FieldReader:
    """Typed access to a decoded JSON object, raising a FileFormatError naming the offending field."""

    def __init__(self, data: Any, path: str, error: type[FileFormatError] = SnapshotFormatError) -> None:
        self.error = error
        if not isinstance(data, dict):
            raise error(path or "<root>", f"expected an object, got {type(data).__name__}")
        self.data = data
        self.path = path

    def field_path(self, name: str) -> str:
        return f"{self.path}.{name}" if self.path else name

    def get(self, name: str, expected: type | tuple[type, ...], *, optional: bool = False) -> Any:
        if name not in self.data:
            if optional:
                return None
            raise self.error(self.field_path(name), "missing")
        value = self.data[name]
        if value is None and optional:
            return None
        # bool is an int subclass, never accept it where a number is expected
        if not isinstance(value, expected) or (isinstance(value, bool) and bool not in _as_tuple(expected)):
            raise self.error(self.field_path(name), f"expected {_type_names(expected)}, got {type(value).__name__}")
        return value

    def get_str(self, name: str, *, optional: bool = False) -> Any:
        return self.get(name, str, optional=optional)

    def get_int(self, name: str, *, optional: bool = False) -> Any:
        return self.get(name, int, optional=optional)

    def get_str_list(self, name: str) -> list[str]:
        values = self.get(name, list)
        for index, value in enumerate(values):
            if not isinstance(value, str):
                raise self.error(f"{self.field_path(name)}[{index}]", f"expected str, got {type(value).__name__}")
        return values

    def get_object(self, name: str) -> FieldReader:
        return FieldReader(self.get(name, dict), self.field_path(name), self.error)

    def get_objects(self, name: str) -> list[FieldReader]:
        return [
            FieldReader(item, f"{self.field_path(name)}[{index}]", self.error)
            for index, item in enumerate(self.get(name, list))
        ]

    def get_enum(self, name: str, enum_type: type[Any]) -> Any:
        value = self.get_str(name)
        try:
            return enum_type(value)
        except ValueError as exc:
            raise self.error(self.field_path(name), f"unknown value {value!r}") from exc


def _as_tuple(expected: type | tuple[type, ...]) -> tuple[type, ...]:
    return expected if isinstance(expected, tuple) else (expected,)


def _type_names(expected: type | tuple[type, ...]) -> str:
    return " or ".join(typ.__name__ for typ in _as_tuple(expected))


@dataclass(frozen=True)
class SubprogramDecl:
    qualified_name: QualifiedName
    kind: SubprogramKind
    body_span: Span
    normalized_hash: str
    # character offset just after the subprogram's own `begin`, None without statement part
    statements_offset: Optional[int] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "qualified_name": self.qualified_name,
            "kind": self.kind.value,
            "body_span": list(self.body_span),
            "normalized_hash": self.normalized_hash,
            "statements_offset": self.statements_offset,
        }

    @classmethod
    def from_dict(cls, reader: FieldReader) -> Self:
        span = reader.get("body_span", list)
        if len(span) != 2 or not all(isinstance(bound, int) and not isinstance(bound, bool) for bound in span):
            raise reader.error(reader.field_path("body_span"), "expected two integers")
        return cls(
            qualified_name=reader.get_str("qualified_name"),
            kind=reader.get_enum("kind", SubprogramKind),
            body_span=(span[0], span[1]),
            normalized_hash=reader.get_str("normalized_hash"),
            statements_offset=reader.get_int("statements_offset", optional=True),
        )


@dataclass(frozen=True)
class UnitModel:
    """What a single unit contributes to its PackageModel."""

    path: str
    kind: UnitKind
    package_name: PackageName
    withs: frozenset[PackageName]
    subprograms: tuple[SubprogramDecl, ...]
    declarations: frozenset[QualifiedName]
    residue_hash: str
    # withs of a `limited with` clause, also part of `withs`
    limited_withs: frozenset[PackageName] = frozenset()


@dataclass(frozen=True)
class PackageModel:
    name: PackageName
    spec_withs: frozenset[PackageName] = frozenset()
    # the subset of spec_withs coming from `limited with` clauses
    spec_limited_withs: frozenset[PackageName] = frozenset()
    body_withs: frozenset[PackageName] = frozenset()
    subprograms: tuple[SubprogramDecl, ...] = ()
    spec_residue_hash: Optional[str] = None
    body_residue_hash: Optional[str] = None
    # qualified names of the subprograms declared in the specification
    spec_declarations: frozenset[QualifiedName] = frozenset()
    spec_path: Optional[str] = None
    body_path: Optional[str] = None

    @property
    def has_spec(self) -> bool:
        return self.spec_residue_hash is not None

    @property
    def has_body(self) -> bool:
        return self.body_residue_hash is not None

    @property
    def subprogram_names(self) -> list[QualifiedName]:
        return [subprogram.qualified_name for subprogram in self.subprograms]

    def get_subprogram(self, qualified_name: QualifiedName) -> SubprogramDecl | None:
        return next((sub for sub in self.subprograms if sub.qualified_name == qualified_name), None)

    @classmethod
    def merge(cls, spec: UnitModel | None, body: UnitModel | None) -> Self:
        unit = spec or body
        if unit is None:
            raise ValueError("At least one unit is needed to build a package")
        name = unit.package_name
        spec_withs = set(spec.withs) if spec else set()
        limited_withs = set(spec.limited_withs) if spec else set()
        if "." in name:
            # a child package depends on its parent's specification
            parent = name.rsplit(".", 1)[0]
            spec_withs.add(parent)
            limited_withs.discard(parent)
        spec_withs.discard(name)
        limited_withs.discard(name)
        return cls(
            name=name,
            spec_withs=frozenset(spec_withs),
            spec_limited_withs=frozenset(limited_withs),
            body_withs=frozenset(body.withs - {name}) if body else frozenset(),
            subprograms=body.subprograms if body else (),
            spec_residue_hash=spec.residue_hash if spec else None,
            body_residue_hash=body.residue_hash if body else None,
            spec_declarations=spec.declarations if spec else frozenset(),
            spec_path=spec.path if spec else None,
            body_path=body.path if body else None,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "spec_withs": sorted(self.spec_withs),
            "spec_limited_withs": sorted(self.spec_limited_withs),
            "body_withs": sorted(self.body_withs),
            "subprograms": [subprogram.to_dict() for subprogram in self.subprograms],
            "spec_residue_hash": self.spec_residue_hash,
            "body_residue_hash": self.body_residue_hash,
            "spec_declarations": sorted(self.spec_declarations),
            "spec_path": self.spec_path,
            "body_path": self.body_path,
        }

    @classmethod
    def from_dict(cls, reader: FieldReader) -> Self:
        return cls(
            name=reader.get_str("name"),
            spec_withs=frozenset(reader.get_str_list("spec_withs")),
            spec_limited_withs=frozenset(reader.get_str_list("spec_limited_withs")),
            body_withs=frozenset(reader.get_str_list("body_withs")),
            subprograms=tuple(SubprogramDecl.from_dict(item) for item in reader.get_objects("subprograms")),
            spec_residue_hash=reader.get_str("spec_residue_hash", optional=True),
            body_residue_hash=reader.get_str("body_residue_hash", optional=True),
            spec_declarations=frozenset(reader.get_str_list("spec_declarations")),
            spec_path=reader.get_str("spec_path", optional=True),
            body_path=reader.get_str("body_path", optional=True),
        )
