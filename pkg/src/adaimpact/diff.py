from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

from typing_extensions import Self

from .errors import ChangeSetFormatError, SnapshotMismatchError
from .models import FieldReader, PackageModel
from .snapshot import Snapshot
from .types import ChangeKind, QualifiedName, base_name
from .utils import canonical_json

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Change:
    kind: ChangeKind
    # package name for package-level kinds, qualified subprogram name otherwise
    target: str

    def __str__(self) -> str:
        return f"{self.kind}:{self.target}"

    @property
    def sort_key(self) -> tuple[int, str]:
        return (self.kind.rank, self.target)

    def to_dict(self) -> dict[str, str]:
        return {"kind": self.kind.value, "target": self.target}

    @classmethod
    def from_dict(cls, reader: FieldReader) -> Self:
        return cls(kind=reader.get_enum("kind", ChangeKind), target=reader.get_str("target"))


@dataclass(frozen=True)
class ChangeSet:
    """Classified differences between two snapshots, sorted by kind rank then target."""

    changes: tuple[Change, ...] = ()
    base_id: str = ""
    new_id: str = ""
    # not part of the serialized form
    base: Snapshot | None = field(default=None, compare=False, repr=False)
    new: Snapshot | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "changes", tuple(sorted(set(self.changes), key=lambda change: change.sort_key)))

    def __iter__(self) -> Iterator[Change]:
        return iter(self.changes)

    def __len__(self) -> int:
        return len(self.changes)

    def __bool__(self) -> bool:
        return bool(self.changes)

    def __contains__(self, change: object) -> bool:
        return change in self.changes

    def of_kind(self, *kinds: ChangeKind) -> list[Change]:
        return [change for change in self.changes if change.kind in kinds]

    def union(self, other: ChangeSet) -> ChangeSet:
        """Changes from the base of this set to the new version of `other`, which must start where this one ends.

        Raises:
            SnapshotMismatchError: when `other` was not computed from the new version of this set.
        """
        if self.new_id != other.base_id:
            raise SnapshotMismatchError(
                f"Cannot chain change set {other.base_id} -> {other.new_id} after {self.new_id}"
            )
        return ChangeSet(
            changes=self.changes + other.changes,
            base_id=self.base_id,
            new_id=other.new_id,
            base=self.base,
            new=other.new,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "base_id": self.base_id,
            "new_id": self.new_id,
            "changes": [change.to_dict() for change in self.changes],
        }

    @classmethod
    def from_dict(cls, data: Any) -> Self:
        reader = FieldReader(data, "", ChangeSetFormatError)
        return cls(
            changes=tuple(Change.from_dict(item) for item in reader.get_objects("changes")),
            base_id=reader.get_str("base_id"),
            new_id=reader.get_str("new_id"),
        )


def _subprogram_changes(old: PackageModel, new: PackageModel) -> Iterable[Change]:
    old_subprograms = {subprogram.qualified_name: subprogram for subprogram in old.subprograms}
    new_subprograms = {subprogram.qualified_name: subprogram for subprogram in new.subprograms}

    for name in old_subprograms.keys() & new_subprograms.keys():
        if old_subprograms[name].normalized_hash != new_subprograms[name].normalized_hash:
            yield Change(ChangeKind.SUBPROGRAM_CHANGED, name)

    for kind, names, package in (
        (ChangeKind.SUBPROGRAM_ADDED, new_subprograms.keys() - old_subprograms.keys(), new),
        (ChangeKind.SUBPROGRAM_REMOVED, old_subprograms.keys() - new_subprograms.keys(), old),
    ):
        for name in names:
            yield Change(kind, name)
            yield Change(ChangeKind.BODY_CHANGED, package.name)
            if _is_declared_in_spec(package, name):
                yield Change(ChangeKind.SPEC_CHANGED, package.name)


def _is_declared_in_spec(package: PackageModel, name: QualifiedName) -> bool:
    return base_name(name) in package.spec_declarations


def diff(old: Snapshot, new: Snapshot) -> ChangeSet:
    """Compare two snapshots and classify their differences.

    One edit may produce several changes: adding a subprogram declared in the specification yields
    `SubprogramAdded`, `BodyChanged` and `SpecChanged` for its package.

    Raises:
        SnapshotMismatchError: when the snapshots were built with different hash algorithms.
    """
    if old.hash_algorithm != new.hash_algorithm:
        raise SnapshotMismatchError(
            f"Cannot compare snapshots hashed with {old.hash_algorithm} and {new.hash_algorithm}"
        )

    changes: list[Change] = []
    for name in sorted(old.packages.keys() | new.packages.keys()):
        old_package = old.packages.get(name)
        new_package = new.packages.get(name)
        if old_package is None:
            changes.append(Change(ChangeKind.PACKAGE_ADDED, name))
            continue
        if new_package is None:
            changes.append(Change(ChangeKind.PACKAGE_REMOVED, name))
            continue
        if (
            old_package.spec_residue_hash != new_package.spec_residue_hash
            or old_package.spec_withs != new_package.spec_withs
            or old_package.spec_limited_withs != new_package.spec_limited_withs
        ):
            changes.append(Change(ChangeKind.SPEC_CHANGED, name))
        if (
            old_package.body_residue_hash != new_package.body_residue_hash
            or old_package.body_withs != new_package.body_withs
        ):
            changes.append(Change(ChangeKind.BODY_CHANGED, name))
        changes.extend(_subprogram_changes(old_package, new_package))

    changeset = ChangeSet(tuple(changes), base_id=old.digest, new_id=new.digest, base=old, new=new)
    logger.debug("%d change(s) between %s and %s", len(changeset), changeset.base_id, changeset.new_id)
    return changeset


def save_changeset(changeset: ChangeSet, path: Path | str) -> None:
    Path(path).write_text(canonical_json(changeset.to_dict()), encoding="utf-8")


def load_changeset(path: Path | str) -> ChangeSet:
    """Read a change set written by `save_changeset`.

    Raises:
        ChangeSetFormatError: on a malformed file.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ChangeSetFormatError("<document>", f"invalid JSON at line {exc.lineno} ({exc.msg})") from exc
    except UnicodeDecodeError as exc:
        raise ChangeSetFormatError("<document>", f"invalid UTF-8 byte at offset {exc.start}") from exc
    return ChangeSet.from_dict(data)
