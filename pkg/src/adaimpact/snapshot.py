from __future__ import annotations

import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import cached_property
from pathlib import Path
from typing import Any, Iterator

from typing_extensions import Self

from .errors import SnapshotFormatError, SnapshotVersionError
from .models import FieldReader, PackageModel, SubprogramDecl
from .types import FORMAT_VERSION, HashAlgorithm, PackageName, QualifiedName
from .utils import canonical_json

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Snapshot:
    """All PackageModels of a source tree, keyed by canonical package name."""

    packages: dict[PackageName, PackageModel] = field(default_factory=dict)
    hash_algorithm: HashAlgorithm = field(default_factory=HashAlgorithm.get_default)
    format_version: int = FORMAT_VERSION
    # informational only, excluded from equality and from the canonical form
    created: datetime = field(default_factory=lambda: datetime.now(timezone.utc), compare=False)

    def __post_init__(self) -> None:
        for key, package in self.packages.items():
            if key != package.name:
                raise ValueError(f"Package stored under `{key}` is named `{package.name}`")
        # keep a deterministic iteration order whatever the construction order was
        object.__setattr__(self, "packages", dict(sorted(self.packages.items())))

    def __iter__(self) -> Iterator[PackageModel]:
        return iter(self.packages.values())

    def __contains__(self, name: object) -> bool:
        return name in self.packages

    def __len__(self) -> int:
        return len(self.packages)

    def subprograms(self) -> Iterator[SubprogramDecl]:
        for package in self.packages.values():
            yield from package.subprograms

    @cached_property
    def subprogram_names(self) -> frozenset[QualifiedName]:
        return frozenset(subprogram.qualified_name for subprogram in self.subprograms())

    @cached_property
    def external_dependencies(self) -> frozenset[PackageName]:
        """Withed packages that are not part of the snapshot."""
        withed = {name for package in self for name in package.spec_withs | package.body_withs}
        return frozenset(withed - self.packages.keys())

    @cached_property
    def bodies_without_spec(self) -> frozenset[PackageName]:
        return frozenset(package.name for package in self if package.has_body and not package.has_spec)

    def to_dict(self) -> dict[str, Any]:
        return {
            "format_version": self.format_version,
            "hash_algorithm": self.hash_algorithm.value,
            "packages": {name: package.to_dict() for name, package in self.packages.items()},
        }

    @cached_property
    def canonical_text(self) -> str:
        return canonical_json(self.to_dict())

    @cached_property
    def digest(self) -> str:
        """Content identifier of the snapshot, independent of its creation time."""
        return self.hash_algorithm.hexdigest(self.canonical_text)

    @classmethod
    def from_dict(cls, data: Any, created: datetime | None = None) -> Self:
        reader = FieldReader(data, "")
        version = reader.get("format_version", int)
        if version != FORMAT_VERSION:
            raise SnapshotVersionError(version, FORMAT_VERSION)
        algorithm = reader.get_enum("hash_algorithm", HashAlgorithm)
        packages_reader = reader.get_object("packages")
        packages: dict[PackageName, PackageModel] = {}
        for key in packages_reader.data:
            package = PackageModel.from_dict(packages_reader.get_object(key))
            if package.name != key:
                raise SnapshotFormatError(f"packages.{key}.name", f"does not match its key ({package.name!r})")
            packages[key] = package
        return cls(
            packages=packages,
            hash_algorithm=algorithm,
            format_version=version,
            created=created or datetime.now(timezone.utc),
        )


def _header_line(snapshot: Snapshot) -> str:
    return json.dumps({"created": snapshot.created.isoformat()}) + "\n"


def save(snapshot: Snapshot, path: Path | str) -> None:
    """Write the snapshot atomically: the target is either fully written or untouched.

    The first line is a header holding the creation timestamp, the rest is the canonical form.
    """
    path = Path(path)
    content = _header_line(snapshot) + snapshot.canonical_text
    fd, temp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(content)
        os.replace(temp_name, path)
    except BaseException:
        try:
            os.unlink(temp_name)
        except FileNotFoundError:
            pass
        raise
    logger.debug("Snapshot with %d package(s) saved to %s", len(snapshot), path)


def load(path: Path | str) -> Snapshot:
    """Read a snapshot written by `save`.

    Raises:
        SnapshotFormatError: on a malformed file, naming the first offending field.
        SnapshotVersionError: when the format version is not supported.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise SnapshotFormatError("<document>", f"invalid UTF-8 byte at offset {exc.start}") from exc
    header, separator, body = text.partition("\n")
    if not separator:
        raise SnapshotFormatError("created", "missing header line")
    try:
        header_data = json.loads(header)
    except json.JSONDecodeError as exc:
        raise SnapshotFormatError("created", f"invalid header line ({exc.msg})") from exc
    created_text = FieldReader(header_data, "").get_str("created")
    try:
        created = datetime.fromisoformat(created_text)
    except ValueError as exc:
        raise SnapshotFormatError("created", f"invalid timestamp {created_text!r}") from exc
    try:
        data = json.loads(body)
    except json.JSONDecodeError as exc:
        raise SnapshotFormatError("<document>", f"invalid JSON at line {exc.lineno + 1} ({exc.msg})") from exc
    return Snapshot.from_dict(data, created=created)


def canonical_bytes(path: Path | str) -> bytes:
    """Content of a snapshot file without its timestamp header, for comparisons."""
    return Path(path).read_bytes().partition(b"\n")[2]
