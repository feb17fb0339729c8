from __future__ import annotations

import enum
import hashlib
import os
from typing import TypeAlias

PackageName: TypeAlias = str
QualifiedName: TypeAlias = str
TestId: TypeAlias = str
Span: TypeAlias = tuple[int, int]

FORMAT_VERSION = 1


class HashAlgorithm(str, enum.Enum):
    BLAKE2B_128 = "blake2b-128"
    SHA256 = "sha256"

    def __str__(self) -> str:
        return self.value

    def hexdigest(self, text: str) -> str:
        data = text.encode()
        if self == HashAlgorithm.BLAKE2B_128:
            return hashlib.blake2b(data, digest_size=16).hexdigest()
        return hashlib.sha256(data).hexdigest()

    @classmethod
    def get_default(cls) -> HashAlgorithm:
        try:
            return cls[os.environ.get("ADAIMPACT_HASH_ALGORITHM", "") or cls.BLAKE2B_128.name]
        except KeyError as exc:
            raise ValueError(
                f"Invalid ADAIMPACT_HASH_ALGORITHM environment variable value: {os.environ['ADAIMPACT_HASH_ALGORITHM']}"
            ) from exc


class UnitKind(str, enum.Enum):
    SPEC = "Spec"
    BODY = "Body"

    def __str__(self) -> str:
        return self.value


class SubprogramKind(str, enum.Enum):
    PROCEDURE = "Procedure"
    FUNCTION = "Function"

    def __str__(self) -> str:
        return self.value


class ChangeKind(str, enum.Enum):
    # declaration order is the ordering rank used by ChangeSet
    SPEC_CHANGED = "SpecChanged"
    BODY_CHANGED = "BodyChanged"
    SUBPROGRAM_CHANGED = "SubprogramChanged"
    SUBPROGRAM_ADDED = "SubprogramAdded"
    SUBPROGRAM_REMOVED = "SubprogramRemoved"
    PACKAGE_ADDED = "PackageAdded"
    PACKAGE_REMOVED = "PackageRemoved"

    def __str__(self) -> str:
        return self.value

    @property
    def rank(self) -> int:
        return list(ChangeKind).index(self)

    @property
    def is_subprogram_level(self) -> bool:
        return self in (
            ChangeKind.SUBPROGRAM_CHANGED,
            ChangeKind.SUBPROGRAM_ADDED,
            ChangeKind.SUBPROGRAM_REMOVED,
        )


class EntityKind(str, enum.Enum):
    SPEC = "Spec"
    BODY = "Body"
    SUBPROGRAM = "Subprogram"

    def __str__(self) -> str:
        return self.value

    @property
    def rank(self) -> int:
        return list(EntityKind).index(self)


class OutputFormat(str, enum.Enum):
    JSON = "json"
    TEXT = "text"

    def __str__(self) -> str:
        return self.value


def base_name(qualified_name: QualifiedName) -> QualifiedName:
    """Qualified name without its overload ordinal."""
    return qualified_name.split("#", 1)[0]
