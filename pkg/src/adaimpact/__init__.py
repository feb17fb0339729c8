"""Change impact analysis and regression test selection for Ada source trees."""

from .diff import Change, ChangeSet, diff, load_changeset, save_changeset
from .errors import (
    AdaImpactError,
    ChangeSetFormatError,
    CoverageError,
    FileFormatError,
    ImpactCycleError,
    LexError,
    ParseError,
    SnapshotError,
    SnapshotFormatError,
    SnapshotMismatchError,
    SnapshotVersionError,
    SourceError,
    TreeParseError,
    UsageError,
)
from .frontend import SourceUnit, parse_sources, parse_tree, parse_unit, read_tree
from .graph import (
    CoverageMap,
    Entity,
    ImpactRelation,
    StaticRelations,
    build_static,
    export_dot,
    impact_relation,
    load_coverage,
)
from .lexer import Token, TokenKind, lex, normalize
from .models import PackageModel, SubprogramDecl, UnitModel
from .oracle import DenseClosure, SafetyVerdict, brute_closure, check_safety
from .replay import ReplayReport, replay_experiment
from .selection import SelectionResult, affected_subprograms, affected_tests, analyze, entity
from .snapshot import Snapshot, load, save
from .types import ChangeKind, EntityKind, HashAlgorithm, SubprogramKind, UnitKind

__all__ = [
    "AdaImpactError",
    "Change",
    "ChangeKind",
    "ChangeSet",
    "ChangeSetFormatError",
    "CoverageError",
    "CoverageMap",
    "DenseClosure",
    "Entity",
    "EntityKind",
    "FileFormatError",
    "HashAlgorithm",
    "ImpactCycleError",
    "ImpactRelation",
    "LexError",
    "PackageModel",
    "ParseError",
    "ReplayReport",
    "SafetyVerdict",
    "SelectionResult",
    "Snapshot",
    "SnapshotError",
    "SnapshotFormatError",
    "SnapshotMismatchError",
    "SnapshotVersionError",
    "SourceError",
    "SourceUnit",
    "StaticRelations",
    "SubprogramDecl",
    "SubprogramKind",
    "Token",
    "TokenKind",
    "TreeParseError",
    "UnitKind",
    "UnitModel",
    "UsageError",
    "affected_subprograms",
    "affected_tests",
    "analyze",
    "brute_closure",
    "build_static",
    "check_safety",
    "diff",
    "entity",
    "export_dot",
    "impact_relation",
    "lex",
    "load",
    "load_changeset",
    "load_coverage",
    "normalize",
    "parse_sources",
    "parse_tree",
    "parse_unit",
    "read_tree",
    "replay_experiment",
    "save",
    "save_changeset",
]
