from __future__ import annotations

from pathlib import PurePath
from typing import Sequence


class AdaImpactError(Exception):
    """Base class of every error raised by the analysis."""


class SourceError(AdaImpactError, ValueError):
    """An error located in an Ada source text."""

    def __init__(self, message: str, line: int | None = None, path: PurePath | str | None = None) -> None:
        self.message = message
        self.line = line
        self.path = str(path) if path is not None else None
        super().__init__(self._format())

    def _format(self) -> str:
        location = self.path or "<source>"
        if self.line is not None:
            location = f"{location}:{self.line}"
        return f"{location}: {self.message}"


class LexError(SourceError):
    pass


class ParseError(SourceError):
    def __init__(
        self,
        message: str,
        line: int | None = None,
        path: PurePath | str | None = None,
        subprogram: str | None = None,
    ) -> None:
        self.subprogram = subprogram
        if subprogram is not None:
            message = f"{message} (in subprogram {subprogram})"
        super().__init__(message, line, path)


class TreeParseError(AdaImpactError, ValueError):
    """Aggregates the errors of every unit of a tree that failed to parse."""

    def __init__(self, errors: Sequence[AdaImpactError]) -> None:
        self.errors = list(errors)
        lines = "\n".join(f"  {error}" for error in self.errors)
        super().__init__(f"{len(self.errors)} unit(s) failed to parse:\n{lines}")


class FileFormatError(AdaImpactError, ValueError):
    """A JSON document read by the analysis does not have the expected structure."""

    document = "file"

    def __init__(self, field: str, message: str) -> None:
        self.field = field
        super().__init__(f"Malformed {self.document}, field `{field}`: {message}")


class SnapshotError(AdaImpactError, ValueError):
    pass


class SnapshotFormatError(SnapshotError, FileFormatError):
    document = "snapshot"


class SnapshotVersionError(SnapshotError):
    def __init__(self, found: object, expected: int) -> None:
        self.found = found
        self.expected = expected
        super().__init__(f"Unsupported snapshot format_version {found!r}, expected {expected}")


class SnapshotMismatchError(SnapshotError):
    pass


class ChangeSetFormatError(FileFormatError):
    document = "change set"


class CoverageError(FileFormatError):
    document = "coverage file"


class ImpactCycleError(AdaImpactError, ValueError):
    def __init__(self, cycle: Sequence[str]) -> None:
        self.cycle = list(cycle)
        super().__init__("Specification-level with cycle: " + " -> ".join([*self.cycle, self.cycle[0]]))


class UsageError(AdaImpactError, ValueError):
    """Invalid command line inputs, detected before any work is done."""
