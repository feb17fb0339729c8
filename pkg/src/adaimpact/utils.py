from __future__ import annotations

import json
from typing import TYPE_CHECKING, Any, Union

from rich.console import Console, Group
from rich.table import Table

if TYPE_CHECKING:
    from .diff import ChangeSet
    from .replay import ReplayReport
    from .selection import SelectionResult

Reportable = Union["ChangeSet", "SelectionResult", "ReplayReport"]

# fixed width so text reports do not depend on the terminal
REPORT_WIDTH = 120


def canonical_json(data: Any) -> str:
    """Deterministic JSON text: sorted keys, 2-space indent, trailing newline."""
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _changeset_table(changeset: ChangeSet) -> Table:
    table = Table(title=f"Changes ({len(changeset)})")
    table.add_column("Kind", style="cyan")
    table.add_column("Target", style="magenta")
    for change in changeset:
        table.add_row(change.kind.value, change.target)
    return table


def _selection_tables(selection: SelectionResult) -> list[Table]:
    stats = selection.stats
    summary = Table(title="Test selection")
    summary.add_column("Baseline", justify="right", style="cyan")
    summary.add_column("Selected", justify="right", style="green")
    summary.add_column("Empty coverage", justify="right", style="yellow")
    summary.add_column("Reduction", justify="right", style="magenta")
    summary.add_row(
        str(stats.baseline_size),
        str(stats.selected_size),
        str(stats.empty_coverage_selected),
        f"{stats.reduction_ratio:.1%}",
    )

    per_change = Table(title="Tests per change")
    per_change.add_column("Change", style="cyan")
    per_change.add_column("Nb tests", justify="right", style="green")
    per_change.add_column("Tests", style="yellow")
    for change, tests in sorted(selection.per_change.items(), key=lambda item: item[0].sort_key):
        per_change.add_row(str(change), str(len(tests)), ", ".join(tests))

    tables = [summary, per_change]
    if selection.warnings:
        warnings = Table(title="Warnings")
        warnings.add_column("Message", style="yellow")
        for message in selection.warnings:
            warnings.add_row(message)
        tables.append(warnings)
    return tables


def _replay_tables(report: ReplayReport) -> list[Table]:
    rows = Table(title=f"Replayed changes ({report.subprograms_changed})")
    rows.add_column("Subprogram", style="cyan")
    rows.add_column("Changes", style="magenta")
    rows.add_column("Selected tests", justify="right", style="green")
    if report.verified:
        rows.add_column("Violations", justify="right", style="red")
    for row in report.rows:
        cells = [row.subprogram, ", ".join(change.kind.value for change in row.changes), str(len(row.selected_tests))]
        if report.verified:
            cells.append(str(row.violations))
        rows.add_row(*cells)

    totals = Table(title=f"Totals (baseline of {report.baseline_size} tests)")
    totals.add_column("Mode", style="cyan")
    totals.add_column("Units changed", justify="right", style="magenta")
    totals.add_column("Subprograms changed", justify="right", style="magenta")
    totals.add_column("Tests executed", justify="right", style="green")
    totals.add_row(
        "Without selection",
        str(report.units_changed),
        str(report.subprograms_changed),
        str(report.tests_without_selection),
    )
    totals.add_row(
        "With selection",
        str(report.units_changed),
        str(report.subprograms_changed),
        str(report.tests_with_selection),
    )
    totals.caption = f"Reduction in tests executed: {report.reduction_ratio:.1%}"
    return [rows, totals]


def get_rich_table(reportable: Reportable) -> Group:
    """Tables describing a change set, a test selection or a replay report."""
    from .diff import ChangeSet
    from .replay import ReplayReport
    from .selection import SelectionResult

    if isinstance(reportable, ChangeSet):
        return Group(_changeset_table(reportable))
    if isinstance(reportable, SelectionResult):
        return Group(*_selection_tables(reportable))
    if isinstance(reportable, ReplayReport):
        return Group(*_replay_tables(reportable))
    raise TypeError(f"Cannot render {type(reportable).__name__} as a table")


def get_rich_table_string(reportable: Reportable) -> str:
    table = get_rich_table(reportable)

    console = Console(record=True, width=REPORT_WIDTH, color_system=None, highlight=False)
    with console.capture() as capture:
        console.print(table)

    return capture.get()


def print_rich_table(reportable: Reportable) -> None:
    print(get_rich_table_string(reportable))
