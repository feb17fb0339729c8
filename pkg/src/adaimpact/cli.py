"""Command line interface.

Exit codes: 0 on success (even when no test is selected), 2 on invalid inputs, 3 when `--verify` finds a
violation.
"""

from __future__ import annotations

import argparse
import functools
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

from rich.console import Console
from rich.logging import RichHandler

from .diff import ChangeSet, diff, load_changeset
from .errors import AdaImpactError, SnapshotMismatchError, UsageError
from .frontend import parse_tree, read_tree
from .graph import CoverageMap, build_static, export_dot, impact_relation, load_coverage
from .oracle import check_safety
from .replay import replay_experiment
from .selection import analyze
from .snapshot import Snapshot, load, save
from .types import HashAlgorithm, OutputFormat
from .utils import Reportable, canonical_json, get_rich_table_string

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_VERIFICATION_FAILED = 3

COMMANDS = ("snapshot", "diff", "select", "graph", "replay")

# inputs each command needs, checked before any work
_REQUIRED: dict[str, tuple[str, ...]] = {
    "snapshot": ("tree", "output"),
    "diff": ("base", "new"),
    "select": ("base", "new", "coverage"),
    "graph": ("base",),
    "replay": ("tree", "coverage"),
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    tree: Path | None = None
    # snapshot file or source tree
    base: Path | None = None
    new: Path | None = None
    coverage: Path | None = None
    # change sets of consecutive versions, chained from base to new
    changesets: tuple[Path, ...] = ()
    output: Path | None = None
    format: OutputFormat = OutputFormat.JSON
    verify: bool = False
    include_tests: bool = False
    jobs: int = 1
    verbose: bool = False

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> RunConfig:
        def path(name: str) -> Path | None:
            value = getattr(args, name, None)
            return Path(value) if value is not None else None

        return cls(
            command=args.command,
            tree=path("tree"),
            base=path("base"),
            new=path("new"),
            coverage=path("coverage"),
            changesets=tuple(Path(value) for value in getattr(args, "changes", None) or ()),
            output=path("output"),
            format=OutputFormat(getattr(args, "format", OutputFormat.JSON.value)),
            verify=getattr(args, "verify", False),
            include_tests=getattr(args, "tests", False),
            jobs=getattr(args, "jobs", 1),
            verbose=args.verbose,
        )

    def validate(self) -> None:
        """Raises UsageError when an input is missing or invalid."""
        if self.command not in COMMANDS:
            raise UsageError(f"Unknown command {self.command!r}")
        for name in _REQUIRED[self.command]:
            if getattr(self, name) is None:
                raise UsageError(f"`{self.command}` requires the {name} argument")
        if self.tree is not None and not self.tree.is_dir():
            raise UsageError(f"Source tree not found: {self.tree}")
        inputs: list[Path | None] = [self.base, self.new, self.coverage, *self.changesets]
        for value in inputs:
            if value is not None and not value.exists():
                raise UsageError(f"Input not found: {value}")
        if self.output is not None and not self.output.parent.is_dir():
            raise UsageError(f"Output directory not found: {self.output.parent}")
        if self.jobs < 1:
            raise UsageError(f"--jobs must be at least 1, got {self.jobs}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaimpact",
        description="Change impact analysis and regression test selection for Ada source trees.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable debug logging")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add_output(sub: argparse.ArgumentParser, formats: bool = True) -> None:
        sub.add_argument("-o", "--output", metavar="PATH", help="Write the result to PATH instead of stdout")
        if formats:
            sub.add_argument(
                "--format",
                choices=[fmt.value for fmt in OutputFormat],
                default=OutputFormat.JSON.value,
                help="Output format (default: json)",
            )

    def add_jobs(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("-j", "--jobs", type=int, default=1, help="Number of worker threads (default: 1)")

    sub = subparsers.add_parser("snapshot", help="Parse a source tree and save its snapshot")
    sub.add_argument("tree", metavar="TREE", help="Directory of .ads/.adb files")
    add_output(sub, formats=False)
    add_jobs(sub)

    sub = subparsers.add_parser("diff", help="Classify the changes between two versions")
    sub.add_argument("base", metavar="BASE", help="Snapshot file or source tree of the original version")
    sub.add_argument("new", metavar="NEW", help="Snapshot file or source tree of the modified version")
    add_output(sub)
    add_jobs(sub)

    sub = subparsers.add_parser("select", help="Select the tests impacted by the changes")
    sub.add_argument("base", metavar="BASE", help="Snapshot file or source tree of the original version")
    sub.add_argument("new", metavar="NEW", help="Snapshot file or source tree of the modified version")
    sub.add_argument("--coverage", required=True, metavar="PATH", help="Per-test coverage file")
    sub.add_argument(
        "--changes",
        action="append",
        metavar="PATH",
        help="Change set produced by `diff`, instead of diffing again. Repeat to chain consecutive versions",
    )
    sub.add_argument("--verify", action="store_true", help="Check the selection against the brute-force oracle")
    add_output(sub)
    add_jobs(sub)

    sub = subparsers.add_parser("graph", help="Export the impact graph as DOT")
    sub.add_argument("base", metavar="SOURCE", help="Snapshot file or source tree")
    sub.add_argument("--coverage", metavar="PATH", help="Per-test coverage file, adds call-coupling edges")
    sub.add_argument("--tests", action="store_true", help="Also draw tests and what they cover")
    add_output(sub, formats=False)
    add_jobs(sub)

    sub = subparsers.add_parser("replay", help="Replay a `null;` insertion in every subprogram")
    sub.add_argument("tree", metavar="TREE", help="Directory of .ads/.adb files")
    sub.add_argument("--coverage", required=True, metavar="PATH", help="Per-test coverage file")
    sub.add_argument("--verify", action="store_true", help="Check every replayed selection with the oracle")
    add_output(sub)
    add_jobs(sub)

    return parser


def configure_logging(verbose: bool) -> None:
    package_logger = logging.getLogger("adaimpact")
    if not any(isinstance(handler, RichHandler) for handler in package_logger.handlers):
        package_logger.addHandler(
            RichHandler(console=Console(stderr=True), show_time=False, show_path=False, markup=False)
        )
    package_logger.setLevel(logging.DEBUG if verbose else logging.WARNING)


def _emit(text: str, output: Path | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        output.write_text(text, encoding="utf-8")
        logger.info("Result written to %s", output)


def _render(reportable: Reportable, data: dict[str, Any], config: RunConfig) -> str:
    if config.format == OutputFormat.TEXT:
        return get_rich_table_string(reportable)
    return canonical_json(data)


def load_snapshot_or_tree(path: Path, hash_algorithm: HashAlgorithm | None = None, jobs: int = 1) -> Snapshot:
    """A snapshot file is loaded, a directory is parsed with the given hash algorithm."""
    if path.is_dir():
        return parse_tree(path, hash_algorithm, jobs)
    return load(path)


def cmd_snapshot(config: RunConfig) -> int:
    assert config.tree is not None and config.output is not None
    snapshot = parse_tree(config.tree, jobs=config.jobs)
    save(snapshot, config.output)
    logger.info("Snapshot of %d package(s) written to %s", len(snapshot), config.output)
    return EXIT_OK


def _load_pair(config: RunConfig) -> tuple[Snapshot, Snapshot]:
    assert config.base is not None and config.new is not None
    base = load_snapshot_or_tree(config.base, jobs=config.jobs)
    # a tree is parsed with the algorithm of the base so both are comparable
    new = load_snapshot_or_tree(config.new, base.hash_algorithm, config.jobs)
    return base, new


def cmd_diff(config: RunConfig) -> int:
    base, new = _load_pair(config)
    changes = diff(base, new)
    _emit(_render(changes, changes.to_dict(), config), config.output)
    return EXIT_OK


def cmd_select(config: RunConfig) -> int:
    assert config.coverage is not None
    base, new = _load_pair(config)
    coverage = load_coverage(config.coverage)

    changes: ChangeSet | None = None
    if config.changesets:
        changes = functools.reduce(ChangeSet.union, (load_changeset(path) for path in config.changesets))
        if (changes.base_id, changes.new_id) != (base.digest, new.digest):
            names = ", ".join(str(path) for path in config.changesets)
            raise SnapshotMismatchError(f"Change set {names} was not computed from these two versions")

    analysis = analyze(base, new, coverage, changes)
    _emit(_render(analysis.selection, analysis.selection.to_dict(), config), config.output)

    if config.verify:
        verdict = check_safety(analysis.selection, analysis.changes, analysis.impact, coverage)
        sys.stderr.write(verdict.to_text() + "\n")
        if not verdict.is_valid:
            return EXIT_VERIFICATION_FAILED
    return EXIT_OK


def cmd_graph(config: RunConfig) -> int:
    assert config.base is not None
    snapshot = load_snapshot_or_tree(config.base, jobs=config.jobs)
    coverage = load_coverage(config.coverage) if config.coverage is not None else CoverageMap()
    impact = impact_relation(build_static(snapshot))
    _emit(export_dot(impact, coverage, include_tests=config.include_tests), config.output)
    return EXIT_OK


def cmd_replay_experiment(config: RunConfig) -> int:
    assert config.tree is not None and config.coverage is not None
    coverage = load_coverage(config.coverage)
    report = replay_experiment(read_tree(config.tree), coverage, verify=config.verify, jobs=config.jobs)
    _emit(_render(report, report.to_dict(), config), config.output)
    if config.verify:
        sys.stderr.write(f"{report.violations} violation(s) over {report.subprograms_changed} replayed change(s)\n")
        if report.violations:
            return EXIT_VERIFICATION_FAILED
    return EXIT_OK


_HANDLERS: dict[str, Callable[[RunConfig], int]] = {
    "snapshot": cmd_snapshot,
    "diff": cmd_diff,
    "select": cmd_select,
    "graph": cmd_graph,
    "replay": cmd_replay_experiment,
}


def run(config: RunConfig) -> int:
    try:
        config.validate()
        return _HANDLERS[config.command](config)
    except (AdaImpactError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT_ERROR


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    return run(RunConfig.from_args(args))
