"""Brute-force implementations used to validate an analysis run.

Nothing here is meant to be fast: the closure is a dense Warshall computation over the whole relation.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Iterable

import numpy as np

from .diff import Change, ChangeSet
from .graph import CoverageMap, Entity, ImpactRelation
from .selection import SelectionResult, entity
from .types import QualifiedName, TestId

logger = logging.getLogger(__name__)

MAX_ORACLE_ENTITIES = 10_000


@dataclass(frozen=True, eq=False)
class DenseClosure:
    entities: tuple[Entity, ...]
    # one-step impact, matrix[i, j] is True when entity j is impacted by entity i
    matrix: np.ndarray
    # reflexive-transitive closure of `matrix`
    closure: np.ndarray

    @cached_property
    def index(self) -> dict[Entity, int]:
        return {entity: position for position, entity in enumerate(self.entities)}

    def reachable(self, start: Entity) -> frozenset[Entity]:
        if (row := self.index.get(start)) is None:
            return frozenset()
        return frozenset(self.entities[column] for column in np.flatnonzero(self.closure[row]))

    def affected_subprograms(self, start: Entity) -> frozenset[QualifiedName]:
        return frozenset(reached.name for reached in self.reachable(start) if reached.is_subprogram)


def brute_closure(impact: ImpactRelation) -> DenseClosure:
    """Reflexive-transitive closure of the impact relation as a boolean matrix.

    Raises:
        ValueError: when the relation has more than `MAX_ORACLE_ENTITIES` entities.
    """
    entities = tuple(impact.entities)
    size = len(entities)
    if size > MAX_ORACLE_ENTITIES:
        raise ValueError(f"Oracle closure is limited to {MAX_ORACLE_ENTITIES} entities, got {size}")
    index = {entity: position for position, entity in enumerate(entities)}

    matrix = np.zeros((size, size), dtype=bool)
    for source, target in impact.edges():
        matrix[index[source], index[target]] = True

    closure = matrix | np.eye(size, dtype=bool)
    # Warshall: after step k, paths only go through the first k entities
    for k in range(size):
        closure |= np.outer(closure[:, k], closure[k, :])

    return DenseClosure(entities=entities, matrix=matrix, closure=closure)


class ViolationKind(str, enum.Enum):
    MISSED_TEST = "missed-test"
    UNATTRIBUTED_TEST = "unattributed-test"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    test: TestId
    # affected subprograms the missed test covers
    subprograms: tuple[QualifiedName, ...] = ()

    def to_text(self) -> str:
        if self.kind == ViolationKind.MISSED_TEST:
            return f"{self.kind}: {self.test} covers affected {', '.join(self.subprograms)} but is not selected"
        return f"{self.kind}: {self.test} is selected without being attributed to any change"

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "test": self.test, "subprograms": list(self.subprograms)}


@dataclass(frozen=True)
class SafetyVerdict:
    violations: tuple[Violation, ...]
    affected_subprograms: frozenset[QualifiedName]

    @property
    def is_safe(self) -> bool:
        return not any(violation.kind == ViolationKind.MISSED_TEST for violation in self.violations)

    @property
    def is_valid(self) -> bool:
        return not self.violations

    @property
    def missed_tests(self) -> list[TestId]:
        return [violation.test for violation in self.violations if violation.kind == ViolationKind.MISSED_TEST]

    @property
    def unattributed_tests(self) -> list[TestId]:
        return [violation.test for violation in self.violations if violation.kind == ViolationKind.UNATTRIBUTED_TEST]

    def to_text(self) -> str:
        if self.is_valid:
            return f"OK: no violation ({len(self.affected_subprograms)} affected subprogram(s) checked)"
        lines = [f"FAILED: {len(self.violations)} violation(s)"]
        lines.extend(f"  {violation.to_text()}" for violation in self.violations)
        return "\n".join(lines)

    def to_dict(self) -> dict[str, Any]:
        return {
            "valid": self.is_valid,
            "affected_subprograms": sorted(self.affected_subprograms),
            "violations": [violation.to_dict() for violation in self.violations],
        }


def check_safety(
    selection: SelectionResult,
    changes: ChangeSet | Iterable[Change],
    impact: ImpactRelation,
    coverage: CoverageMap,
) -> SafetyVerdict:
    """Recompute the affected subprograms by brute force and compare the selection against them.

    A violation is either a test covering an affected subprogram that was not selected, or a selected
    test that no change accounts for.
    """
    oracle = brute_closure(impact)
    affected: set[QualifiedName] = set()
    for change in changes:
        affected |= oracle.affected_subprograms(entity(change))

    selected = set(selection.selected_tests)
    attributed = selection.attributed_tests
    violations: list[Violation] = []
    for test in coverage:
        if test not in selected:
            if hit := sorted(coverage.covered_by(test) & affected):
                violations.append(Violation(ViolationKind.MISSED_TEST, test, tuple(hit)))
        elif test not in attributed:
            violations.append(Violation(ViolationKind.UNATTRIBUTED_TEST, test))

    verdict = SafetyVerdict(violations=tuple(violations), affected_subprograms=frozenset(affected))
    if not verdict.is_valid:
        logger.error("Safety check failed with %d violation(s)", len(violations))
    return verdict
