"""Intermediate representation of the analysis.

Static relations (`Contains`, `Uses`) are extracted from a snapshot, dynamic ones (`Covers`) are read from a
coverage file. The impact relation links an entity to the entities that depend on it: it is the inverse of
the one-step dependency and is what the selection walks.
"""

from __future__ import annotations

import functools
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping

import graphviz
import networkx as nx
from typing_extensions import Self

from .errors import CoverageError, ImpactCycleError
from .snapshot import Snapshot
from .types import EntityKind, PackageName, QualifiedName, TestId, UnitKind

logger = logging.getLogger(__name__)


@functools.total_ordering
@dataclass(frozen=True)
class Entity:
    kind: EntityKind
    name: str

    @classmethod
    def spec(cls, package: PackageName) -> Self:
        return cls(EntityKind.SPEC, package)

    @classmethod
    def body(cls, package: PackageName) -> Self:
        return cls(EntityKind.BODY, package)

    @classmethod
    def subprogram(cls, qualified_name: QualifiedName) -> Self:
        return cls(EntityKind.SUBPROGRAM, qualified_name)

    @property
    def is_subprogram(self) -> bool:
        return self.kind == EntityKind.SUBPROGRAM

    @property
    def sort_key(self) -> tuple[int, str]:
        return (self.kind.rank, self.name)

    def __lt__(self, other: object) -> bool:
        if not isinstance(other, Entity):
            return NotImplemented
        return self.sort_key < other.sort_key

    def __str__(self) -> str:
        return f"{self.kind}({self.name})"

    @property
    def node_id(self) -> str:
        """Identifier of the entity in DOT output."""
        if self.is_subprogram:
            return self.name
        return f"{self.kind.value.lower()}_{self.name}"


@dataclass(frozen=True)
class StaticRelations:
    # package -> qualified names of the subprograms its body defines
    contains: dict[PackageName, frozenset[QualifiedName]]
    # (package, unit kind) -> withed packages
    uses: dict[tuple[PackageName, UnitKind], frozenset[PackageName]]
    # withed packages absent from the snapshot
    externals: frozenset[PackageName] = frozenset()
    # package -> packages its specification names in a `limited with` clause, a subset of its spec uses
    limited: dict[PackageName, frozenset[PackageName]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for (package, kind), withed in self.uses.items():
            if package not in self.contains:
                raise ValueError(f"`uses` refers to unknown package {package}")
            if package in withed:
                raise ValueError(f"Package {package} cannot use itself ({kind})")
        for package, withed in self.limited.items():
            if not withed <= self.uses_of(package, UnitKind.SPEC):
                raise ValueError(f"Limited withs of {package} must be part of its specification uses")

    @property
    def packages(self) -> list[PackageName]:
        return sorted(self.contains)

    def uses_of(self, package: PackageName, kind: UnitKind) -> frozenset[PackageName]:
        return self.uses.get((package, kind), frozenset())

    @cached_property
    def contained_by(self) -> dict[QualifiedName, PackageName]:
        """Inverse of `contains`."""
        return {name: package for package, names in self.contains.items() for name in names}

    @cached_property
    def used_by(self) -> dict[PackageName, frozenset[tuple[PackageName, UnitKind]]]:
        """Inverse of `uses`: withed package -> (package, unit kind) withing it."""
        inverse: defaultdict[PackageName, set[tuple[PackageName, UnitKind]]] = defaultdict(set)
        for key, withed in self.uses.items():
            for package in withed:
                inverse[package].add(key)
        return {package: frozenset(keys) for package, keys in inverse.items()}


def build_static(snapshot: Snapshot) -> StaticRelations:
    """Extract `Contains` and `Uses` from a snapshot, without any transitive entry."""
    contains = {package.name: frozenset(package.subprogram_names) for package in snapshot}
    uses: dict[tuple[PackageName, UnitKind], frozenset[PackageName]] = {}
    for package in snapshot:
        uses[(package.name, UnitKind.SPEC)] = package.spec_withs
        uses[(package.name, UnitKind.BODY)] = package.body_withs
    limited = {package.name: package.spec_limited_withs for package in snapshot if package.spec_limited_withs}
    for name in sorted(snapshot.external_dependencies):
        logger.info("Package %s is withed but not part of the tree, changes to it cannot be detected", name)
    return StaticRelations(contains=contains, uses=uses, externals=snapshot.external_dependencies, limited=limited)


@dataclass(frozen=True)
class ImpactRelation:
    impact: dict[Entity, frozenset[Entity]] = field(default_factory=dict)

    def __contains__(self, entity: object) -> bool:
        return entity in self.impact

    def __len__(self) -> int:
        return len(self.impact)

    def successors(self, entity: Entity) -> frozenset[Entity]:
        return self.impact.get(entity, frozenset())

    @cached_property
    def entities(self) -> list[Entity]:
        """Every entity, as key or successor, sorted."""
        found = set(self.impact)
        for successors in self.impact.values():
            found.update(successors)
        return sorted(found)

    @cached_property
    def packages(self) -> frozenset[PackageName]:
        return frozenset(entity.name for entity in self.entities if not entity.is_subprogram)

    @cached_property
    def subprograms(self) -> frozenset[QualifiedName]:
        return frozenset(entity.name for entity in self.entities if entity.is_subprogram)

    def edges(self) -> Iterator[tuple[Entity, Entity]]:
        for source in sorted(self.impact):
            for target in sorted(self.impact[source]):
                yield source, target

    def union(self, other: ImpactRelation) -> ImpactRelation:
        merged: dict[Entity, frozenset[Entity]] = dict(self.impact)
        for entity, successors in other.impact.items():
            merged[entity] = merged.get(entity, frozenset()) | successors
        return ImpactRelation(merged)

    def dependency_graph(self) -> nx.DiGraph:
        """The relation in dependency direction: an edge from each entity to what it depends on."""
        graph = nx.DiGraph()
        graph.add_nodes_from(self.entities)
        graph.add_edges_from((target, source) for source, target in self.edges())
        return graph


def _check_spec_cycles(relations: StaticRelations) -> None:
    # `limited with` clauses may form cycles
    graph = nx.DiGraph()
    graph.add_nodes_from(relations.packages)
    for package in relations.packages:
        withed = relations.uses_of(package, UnitKind.SPEC) - relations.limited.get(package, frozenset())
        graph.add_edges_from((package, name) for name in sorted(withed))
    try:
        cycle = nx.find_cycle(graph)
    except nx.NetworkXNoCycle:
        return
    raise ImpactCycleError([source for source, _ in cycle])


def impact_relation(relations: StaticRelations) -> ImpactRelation:
    """One-step impact relation of the static relations.

    - a specification impacts its own body and every unit withing it,
    - a body impacts the subprograms it contains,
    - a subprogram impacts nothing statically.

    Raises:
        ImpactCycleError: when the non-limited with clauses of package specifications form a cycle.
    """
    _check_spec_cycles(relations)
    impact: defaultdict[Entity, set[Entity]] = defaultdict(set)

    for package in relations.packages:
        impact[Entity.spec(package)].add(Entity.body(package))
        impact[Entity.body(package)].update(Entity.subprogram(name) for name in relations.contains[package])
        for name in relations.contains[package]:
            impact.setdefault(Entity.subprogram(name), set())

    for package in sorted(relations.used_by):
        for user, kind in relations.used_by[package]:
            target = Entity.spec(user) if kind == UnitKind.SPEC else Entity.body(user)
            impact[Entity.spec(package)].add(target)

    return ImpactRelation({entity: frozenset(successors) for entity, successors in sorted(impact.items())})


@dataclass(frozen=True)
class CoverageMap:
    """Subprograms covered by each test of the baseline, the baseline keeping the file order."""

    covers: dict[TestId, frozenset[QualifiedName]] = field(default_factory=dict)
    baseline: tuple[TestId, ...] = ()

    def __post_init__(self) -> None:
        if len(set(self.baseline)) != len(self.baseline):
            raise ValueError("Test baseline contains duplicates")
        if missing := self.covers.keys() - set(self.baseline):
            raise ValueError(f"Tests with coverage are missing from the baseline: {', '.join(sorted(missing))}")

    @classmethod
    def from_tests(cls, tests: Mapping[TestId, Iterable[QualifiedName]]) -> Self:
        return cls(
            covers={test: frozenset(name.lower() for name in names) for test, names in tests.items()},
            baseline=tuple(tests),
        )

    def __len__(self) -> int:
        return len(self.baseline)

    def __iter__(self) -> Iterator[TestId]:
        return iter(self.baseline)

    def covered_by(self, test: TestId) -> frozenset[QualifiedName]:
        return self.covers.get(test, frozenset())

    @cached_property
    def subprograms(self) -> frozenset[QualifiedName]:
        return frozenset(name for names in self.covers.values() for name in names)

    @cached_property
    def empty_tests(self) -> tuple[TestId, ...]:
        return tuple(test for test in self.baseline if not self.covered_by(test))

    def unknown_subprograms(self, *known: Iterable[QualifiedName]) -> list[QualifiedName]:
        """Covered names absent from every given set of known names."""
        names = set().union(*known) if known else set()
        return sorted(self.subprograms - names)

    def to_dict(self) -> dict[str, Any]:
        return {"tests": {test: sorted(self.covered_by(test)) for test in self.baseline}}


def _reject_duplicate_keys(pairs: list[tuple[str, Any]]) -> dict[str, Any]:
    result: dict[str, Any] = {}
    for key, value in pairs:
        if key in result:
            raise CoverageError(key if key == "tests" else f"tests.{key}", "duplicate test id")
        result[key] = value
    return result


def load_coverage(path: Path | str) -> CoverageMap:
    """Read a coverage file: `{"tests": {"<test-id>": ["pkg.sub", ...], ...}}`.

    Subprogram names are lowercased. Names unknown to the snapshots are kept: a test covering a removed
    subprogram must stay selectable.

    Raises:
        CoverageError: on a malformed file or a duplicate test id.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"), object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise CoverageError("<document>", f"invalid JSON at line {exc.lineno} ({exc.msg})") from exc
    except UnicodeDecodeError as exc:
        raise CoverageError("<document>", f"invalid UTF-8 byte at offset {exc.start}") from exc
    if not isinstance(data, dict):
        raise CoverageError("<root>", f"expected an object, got {type(data).__name__}")
    if "tests" not in data:
        raise CoverageError("tests", "missing")
    tests = data["tests"]
    if not isinstance(tests, dict):
        raise CoverageError("tests", f"expected an object, got {type(tests).__name__}")
    for test, names in tests.items():
        if not isinstance(names, list):
            raise CoverageError(f"tests.{test}", f"expected a list, got {type(names).__name__}")
        for index, name in enumerate(names):
            if not isinstance(name, str):
                raise CoverageError(f"tests.{test}[{index}]", f"expected str, got {type(name).__name__}")
    coverage = CoverageMap.from_tests(tests)
    logger.debug("Coverage of %d test(s) loaded from %s", len(coverage), path)
    return coverage


def coupling_edges(impact: ImpactRelation, coverage: CoverageMap) -> list[tuple[QualifiedName, QualifiedName]]:
    """Subprogram pairs (u, v) covered by a common test, where the body of u depends on the spec of v."""
    dependencies = impact.dependency_graph()
    contained_by = {
        target.name: source.name
        for source, target in impact.edges()
        if target.is_subprogram and not source.is_subprogram
    }
    edges: set[tuple[QualifiedName, QualifiedName]] = set()
    for test in coverage:
        names = sorted(name for name in coverage.covered_by(test) if name in contained_by)
        for source in names:
            for target in names:
                if source == target or (source, target) in edges:
                    continue
                if nx.has_path(dependencies, Entity.body(contained_by[source]), Entity.spec(contained_by[target])):
                    edges.add((source, target))
    return sorted(edges)


def export_dot(impact: ImpactRelation, coverage: CoverageMap | None = None, include_tests: bool = False) -> str:
    """Render the relations as a DOT digraph, edges drawn in dependency direction.

    Static edges are solid, call-coupling edges implied by coverage are dashed, and (with `include_tests`)
    tests are linked to what they cover with dotted edges.
    """
    coverage = coverage or CoverageMap()
    dot = graphviz.Digraph("impact", graph_attr={"rankdir": "BT"}, node_attr={"fontname": "Helvetica"})

    for entity in impact.entities:
        shape = "ellipse" if entity.is_subprogram else "box"
        dot.node(entity.node_id, label=str(entity) if not entity.is_subprogram else entity.name, shape=shape)

    for source, target in sorted(impact.edges(), key=lambda edge: (edge[1], edge[0])):
        dot.edge(target.node_id, source.node_id, style="solid")

    for source_name, target_name in coupling_edges(impact, coverage):
        dot.edge(source_name, target_name, style="dashed")

    if include_tests:
        for test in coverage:
            node_id = "test_" + test.replace(":", "_")
            dot.node(node_id, label=test, shape="note")
            for name in sorted(coverage.covered_by(test)):
                dot.edge(node_id, name, style="dotted")

    return dot.source
