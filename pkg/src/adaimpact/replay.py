"""Replay of the `null;` insertion experiment on a source tree.

Each subprogram of the tree is edited alone, in memory, by inserting a `null;` statement at the start of
its statement part. The edited unit is re-parsed, the pipeline runs on the resulting pair of snapshots and
the selected tests are compared with a retest-all strategy.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Mapping

from .diff import Change
from .frontend import SourceUnit, parse_sources, parse_unit, replace_unit
from .graph import CoverageMap
from .models import PackageModel, SubprogramDecl
from .oracle import check_safety
from .selection import analyze
from .snapshot import Snapshot
from .types import HashAlgorithm, PackageName, QualifiedName, TestId

logger = logging.getLogger(__name__)

NULL_STATEMENT = " null;"


def insert_null_statement(text: str, offset: int) -> str:
    return text[:offset] + NULL_STATEMENT + text[offset:]


@dataclass(frozen=True)
class ReplayRow:
    subprogram: QualifiedName
    # library package whose body holds the subprogram, nested packages included
    package: PackageName
    changes: tuple[Change, ...]
    selected_tests: tuple[TestId, ...]
    # None when the run was not verified
    violations: int | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "subprogram": self.subprogram,
            "package": self.package,
            "changes": [str(change) for change in self.changes],
            "selected_tests": list(self.selected_tests),
            "selected_size": len(self.selected_tests),
            "violations": self.violations,
        }


@dataclass(frozen=True)
class ReplayReport:
    rows: tuple[ReplayRow, ...]
    baseline_size: int
    # subprograms without a statement part, not replayed
    skipped: tuple[QualifiedName, ...] = ()
    verified: bool = False

    @property
    def units_changed(self) -> int:
        return len({row.package for row in self.rows})

    @property
    def subprograms_changed(self) -> int:
        return len(self.rows)

    @property
    def tests_without_selection(self) -> int:
        """Tests executed when retesting everything after each change."""
        return self.baseline_size * len(self.rows)

    @property
    def tests_with_selection(self) -> int:
        return sum(len(row.selected_tests) for row in self.rows)

    @property
    def reduction_ratio(self) -> float:
        if not self.tests_without_selection:
            return 1.0
        return 1 - self.tests_with_selection / self.tests_without_selection

    @property
    def violations(self) -> int:
        return sum(row.violations or 0 for row in self.rows)

    def to_dict(self) -> dict[str, Any]:
        return {
            "baseline_size": self.baseline_size,
            "rows": [row.to_dict() for row in self.rows],
            "skipped": list(self.skipped),
            "totals": {
                "without_selection": {
                    "units_changed": self.units_changed,
                    "subprograms_changed": self.subprograms_changed,
                    "tests_executed": self.tests_without_selection,
                },
                "with_selection": {
                    "units_changed": self.units_changed,
                    "subprograms_changed": self.subprograms_changed,
                    "tests_executed": self.tests_with_selection,
                },
            },
            "reduction_ratio": self.reduction_ratio,
            "verified": self.verified,
            "violations": self.violations if self.verified else None,
        }


def _replay_one(
    base: Snapshot,
    sources: Mapping[str, str],
    package: PackageModel,
    subprogram: SubprogramDecl,
    coverage: CoverageMap,
    verify: bool,
) -> ReplayRow:
    assert subprogram.statements_offset is not None and package.body_path is not None
    edited = insert_null_statement(sources[package.body_path], subprogram.statements_offset)
    unit = parse_unit(SourceUnit.from_text(package.body_path, edited), base.hash_algorithm)
    analysis = analyze(base, replace_unit(base, unit), coverage)
    violations = None
    if verify:
        verdict = check_safety(analysis.selection, analysis.changes, analysis.impact, coverage)
        violations = len(verdict.violations)
    return ReplayRow(
        subprogram=subprogram.qualified_name,
        package=package.name,
        changes=analysis.changes.changes,
        selected_tests=analysis.selection.selected_tests,
        violations=violations,
    )


def replay_experiment(
    sources: Mapping[str, str],
    coverage: CoverageMap,
    hash_algorithm: HashAlgorithm | None = None,
    verify: bool = False,
    jobs: int = 1,
) -> ReplayReport:
    """Replay one `null;` insertion per subprogram, each change processed separately.

    `sources` maps relative paths to unit texts (see `frontend.read_tree`); they are never modified.

    Raises:
        TreeParseError: if the tree does not parse.
    """
    base = parse_sources(sources, hash_algorithm, jobs)
    targets: list[tuple[PackageModel, SubprogramDecl]] = []
    skipped: list[QualifiedName] = []
    for package in base:
        for subprogram in package.subprograms:
            if subprogram.statements_offset is None or package.body_path is None:
                skipped.append(subprogram.qualified_name)
            else:
                targets.append((package, subprogram))
    targets.sort(key=lambda target: target[1].qualified_name)
    for name in sorted(skipped):
        logger.info("Subprogram %s has no statement part, not replayed", name)

    def run(target: tuple[PackageModel, SubprogramDecl]) -> ReplayRow:
        return _replay_one(base, sources, target[0], target[1], coverage, verify)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            rows = list(executor.map(run, targets))
    else:
        rows = [run(target) for target in targets]

    report = ReplayReport(
        rows=tuple(rows), baseline_size=len(coverage), skipped=tuple(sorted(skipped)), verified=verify
    )
    logger.info(
        "Replayed %d change(s): %d test(s) executed instead of %d",
        report.subprograms_changed,
        report.tests_with_selection,
        report.tests_without_selection,
    )
    return report
