from __future__ import annotations

import shutil
from pathlib import Path
from typing import Mapping

from adaimpact import CoverageMap, Snapshot, SourceUnit, load_coverage, parse_tree, read_tree

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_path(name: str) -> Path:
    return FIXTURES / name


def fixture_snapshot(name: str) -> Snapshot:
    return parse_tree(FIXTURES / name)


def fixture_sources(name: str) -> dict[str, str]:
    return read_tree(FIXTURES / name)


def fixture_unit(name: str, path: str) -> SourceUnit:
    return SourceUnit.from_text(path, fixture_sources(name)[path])


def fixture_coverage(name: str) -> CoverageMap:
    return load_coverage(FIXTURES / name / "coverage.json")


def write_tree(root: Path, files: Mapping[str, str]) -> Path:
    """Write `files` (relative path -> text) under `root` and return it."""
    root.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        path = root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    return root


def copy_fixture(name: str, destination: Path) -> Path:
    shutil.copytree(FIXTURES / name, destination)
    return destination


def edit(sources: Mapping[str, str], path: str, old: str, new: str) -> dict[str, str]:
    """Copy of `sources` with one occurrence of `old` replaced in `path`."""
    assert old in sources[path], f"{old!r} not found in {path}"
    return {**sources, path: sources[path].replace(old, new, 1)}
