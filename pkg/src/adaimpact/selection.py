from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Iterable

from .diff import Change, ChangeSet, diff
from .graph import CoverageMap, Entity, ImpactRelation, build_static, impact_relation
from .snapshot import Snapshot
from .types import ChangeKind, EntityKind, PackageName, QualifiedName, TestId

logger = logging.getLogger(__name__)


def entity(change: Change) -> Entity:
    """Entity from which the impact of a change is propagated.

    Removed entities only exist in the old relation and added ones only in the new one: evaluate them
    against the union of both (see `analyze`).
    """
    if change.kind == ChangeKind.SPEC_CHANGED:
        return Entity.spec(change.target)
    if change.kind == ChangeKind.BODY_CHANGED:
        return Entity.body(change.target)
    if change.kind.is_subprogram_level:
        return Entity.subprogram(change.target)
    # PackageAdded, PackageRemoved
    return Entity.spec(change.target)


def reached_entities(change: Entity, impact: ImpactRelation) -> frozenset[Entity]:
    """Reflexive-transitive closure of the impact relation from one entity, by worklist.

    Each entity enters the work list at most once, which guarantees termination.
    """
    if change not in impact:
        return frozenset()
    found = {change}
    todo = [change]
    while todo:
        current = todo.pop()
        for successor in impact.successors(current):
            if successor not in found:
                found.add(successor)
                todo.append(successor)
    return frozenset(found)


def affected_subprograms(change: Entity, impact: ImpactRelation) -> frozenset[QualifiedName]:
    """Subprograms reached from `change` through the impact relation, `change` included if it is one.

    An entity unknown to the relation affects nothing.
    """
    if change not in impact:
        logger.warning("Unknown entity %s, no subprogram affected", change)
        return frozenset()
    return frozenset(item.name for item in reached_entities(change, impact) if item.is_subprogram)


def owning_package(name: QualifiedName, packages: Iterable[PackageName]) -> PackageName | None:
    """Longest known package prefix of a qualified subprogram name."""
    known = set(packages)
    parts = name.split("#", 1)[0].split(".")
    for length in range(len(parts) - 1, 0, -1):
        if (candidate := ".".join(parts[:length])) in known:
            return candidate
    return None


@dataclass(frozen=True)
class SelectionStats:
    baseline_size: int
    selected_size: int
    empty_coverage_selected: int = 0

    @property
    def reduction_ratio(self) -> float:
        if not self.baseline_size:
            return 1.0
        return 1 - self.selected_size / self.baseline_size

    def to_dict(self) -> dict[str, Any]:
        return {
            "baseline_size": self.baseline_size,
            "selected_size": self.selected_size,
            "reduction_ratio": self.reduction_ratio,
            "empty_coverage_selected": self.empty_coverage_selected,
        }


@dataclass(frozen=True)
class SelectionResult:
    affected_subprograms: frozenset[QualifiedName]
    # in baseline order
    selected_tests: tuple[TestId, ...]
    per_change: dict[Change, tuple[TestId, ...]]
    stats: SelectionStats
    # tests without coverage, selected because the change set is not empty
    empty_coverage_tests: tuple[TestId, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def attributed_tests(self) -> frozenset[TestId]:
        attributed = set(self.empty_coverage_tests)
        for tests in self.per_change.values():
            attributed.update(tests)
        return frozenset(attributed)

    def to_dict(self) -> dict[str, Any]:
        return {
            "affected_subprograms": sorted(self.affected_subprograms),
            "selected_tests": list(self.selected_tests),
            "stats": self.stats.to_dict(),
            "per_change": {
                str(change): list(tests)
                for change, tests in sorted(self.per_change.items(), key=lambda item: item[0].sort_key)
            },
            "empty_coverage_tests": list(self.empty_coverage_tests),
            "warnings": list(self.warnings),
        }


def affected_tests(
    changes: ChangeSet | Iterable[Change],
    impact: ImpactRelation,
    coverage: CoverageMap,
    warnings: Iterable[str] = (),
) -> SelectionResult:
    """Select the tests of the baseline whose coverage may be affected by the changes.

    A test is selected when it covers a subprogram affected by some change. Two conservative rules
    complete it: a covered name unknown to the relation is attributed to its owning package and selects
    the test when that package's body is reached, and tests without any coverage are selected as soon as
    there is a change.
    """
    change_list = list(changes)
    all_warnings = list(warnings)

    known_packages = impact.packages
    stale: dict[QualifiedName, PackageName | None] = {
        name: owning_package(name, known_packages) for name in coverage.unknown_subprograms(impact.subprograms)
    }
    for name, owner in sorted(stale.items()):
        if owner is None:
            message = f"Covered subprogram {name} is unknown and belongs to no known package"
        else:
            message = f"Covered subprogram {name} is unknown, attributed to the body of {owner}"
        logger.warning(message)
        all_warnings.append(message)

    affected: set[QualifiedName] = set()
    per_change: dict[Change, tuple[TestId, ...]] = {}
    for change in change_list:
        start = entity(change)
        if start not in impact:
            message = f"Change {change} refers to an unknown entity, no test selected for it"
            logger.warning(message)
            all_warnings.append(message)
            per_change[change] = ()
            continue
        reached = reached_entities(start, impact)
        subprograms = {item.name for item in reached if item.is_subprogram}
        bodies = {item.name for item in reached if item.kind == EntityKind.BODY}
        affected |= subprograms
        per_change[change] = tuple(
            test
            for test in coverage
            if not subprograms.isdisjoint(coverage.covered_by(test))
            or any(stale.get(name) in bodies for name in coverage.covered_by(test) if name in stale)
        )

    empty_tests = coverage.empty_tests if change_list else ()
    selected = set(empty_tests)
    for tests in per_change.values():
        selected.update(tests)
    selected_tests = tuple(test for test in coverage if test in selected)

    return SelectionResult(
        affected_subprograms=frozenset(affected),
        selected_tests=selected_tests,
        per_change=per_change,
        stats=SelectionStats(
            baseline_size=len(coverage),
            selected_size=len(selected_tests),
            empty_coverage_selected=len(empty_tests),
        ),
        empty_coverage_tests=tuple(empty_tests),
        warnings=tuple(all_warnings),
    )


def retest_all(changes: ChangeSet | Iterable[Change], coverage: CoverageMap) -> SelectionResult:
    """The trivial safe selection: every test of the baseline, attributed to every change."""
    return SelectionResult(
        affected_subprograms=frozenset(),
        selected_tests=tuple(coverage),
        per_change={change: tuple(coverage) for change in changes},
        stats=SelectionStats(baseline_size=len(coverage), selected_size=len(coverage)),
    )


def snapshot_warnings(*snapshots: Snapshot) -> list[str]:
    warnings: set[str] = set()
    for snapshot in snapshots:
        warnings.update(f"Package body {name} has no specification" for name in snapshot.bodies_without_spec)
        warnings.update(f"External dependency {name} is not analyzed" for name in snapshot.external_dependencies)
    return sorted(warnings)


@dataclass(frozen=True)
class Analysis:
    """Everything computed to select the tests between two snapshots."""

    changes: ChangeSet
    impact: ImpactRelation
    coverage: CoverageMap
    selection: SelectionResult = field(repr=False)


def analyze(base: Snapshot, new: Snapshot, coverage: CoverageMap, changes: ChangeSet | None = None) -> Analysis:
    """Diff two snapshots (unless `changes` is given) and select the affected tests.

    Every change is evaluated against the union of the old and new impact relations: removed entities are
    only known to the old one, added entities to the new one.
    """
    if changes is None:
        changes = diff(base, new)
    impact = impact_relation(build_static(base)).union(impact_relation(build_static(new)))
    selection = affected_tests(changes, impact, coverage, snapshot_warnings(base, new))
    logger.info(
        "%d change(s), %d of %d test(s) selected",
        len(changes),
        selection.stats.selected_size,
        selection.stats.baseline_size,
    )
    return Analysis(changes=changes, impact=impact, coverage=coverage, selection=selection)
