import pytest

from adaimpact import Change, ChangeKind, CoverageMap, TreeParseError, replay_experiment
from adaimpact.replay import insert_null_statement

from .helpers import fixture_coverage, fixture_sources


def test_insert_null_statement():
    assert insert_null_statement("begin\nend", 5) == "begin null;\nend"


def test_replay_small():
    report = replay_experiment(fixture_sources("small"), fixture_coverage("small"))
    assert [row.subprogram for row in report.rows] == [
        "counter.increment",
        "counter.reset",
        "counter.value",
        "report.print",
        "report.summary",
    ]
    assert report.baseline_size == 3
    assert report.units_changed == 2
    assert report.subprograms_changed == 5
    assert report.tests_without_selection == 15
    assert report.tests_with_selection == 5
    assert report.reduction_ratio == pytest.approx(2 / 3)
    assert report.violations == 0
    assert report.skipped == ()


def test_each_row_is_a_single_subprogram_change():
    report = replay_experiment(fixture_sources("small"), fixture_coverage("small"))
    for row in report.rows:
        assert row.changes == (Change(ChangeKind.SUBPROGRAM_CHANGED, row.subprogram),)
        assert row.violations is None


def test_replay_fig3():
    coverage = CoverageMap.from_tests({"t1": ["a.foo", "b.bar"], "t2": ["b.bar"]})
    report = replay_experiment(fixture_sources("fig3"), coverage)
    assert {row.subprogram: row.selected_tests for row in report.rows} == {
        "a.foo": ("t1",),
        "b.bar": ("t1", "t2"),
    }


def test_replay_demo_corpus():
    report = replay_experiment(fixture_sources("demo"), fixture_coverage("demo"), verify=True)
    assert report.baseline_size == 21
    assert report.subprograms_changed == 39
    assert report.units_changed == 9
    assert report.tests_without_selection == 819
    assert report.tests_with_selection == 77
    assert report.reduction_ratio == pytest.approx(1 - 77 / 819)
    assert report.reduction_ratio > 0.5
    assert report.verified
    assert report.violations == 0
    rows = {row.subprogram: row for row in report.rows}
    assert rows["ada_words.is_delimiter"].selected_tests == ("test_is_delimiter", "test_classify")


def test_replay_in_parallel_gives_the_same_rows():
    sources = fixture_sources("demo")
    coverage = fixture_coverage("demo")
    assert replay_experiment(sources, coverage, jobs=2).rows == replay_experiment(sources, coverage).rows


def test_replay_leaves_sources_untouched():
    sources = fixture_sources("small")
    copy = dict(sources)
    replay_experiment(sources, fixture_coverage("small"))
    assert sources == copy


def test_subprograms_without_statements_are_skipped():
    sources = {
        "p.ads": "package P is\n   procedure Nothing;\n   procedure Work;\nend P;\n",
        "p.adb": (
            "package body P is\n"
            "   procedure Nothing is null;\n"
            "   procedure Work is\n   begin\n      null;\n   end Work;\n"
            "end P;\n"
        ),
    }
    report = replay_experiment(sources, CoverageMap.from_tests({"t": ["p.work"]}))
    assert report.skipped == ("p.nothing",)
    assert [row.subprogram for row in report.rows] == ["p.work"]
    assert report.rows[0].selected_tests == ("t",)


def test_empty_tree():
    report = replay_experiment({}, CoverageMap())
    assert report.rows == ()
    assert report.reduction_ratio == 1.0


def test_unparseable_tree():
    with pytest.raises(TreeParseError):
        replay_experiment({"p.ads": "package P is\nend Q;\n"}, CoverageMap())


def test_report_to_dict():
    report = replay_experiment(fixture_sources("fig3"), fixture_coverage("fig3"), verify=True)
    data = report.to_dict()
    assert data["baseline_size"] == 1
    assert data["rows"][0] == {
        "subprogram": "a.foo",
        "package": "a",
        "changes": ["SubprogramChanged:a.foo"],
        "selected_tests": ["t"],
        "selected_size": 1,
        "violations": 0,
    }
    assert data["totals"]["without_selection"]["tests_executed"] == 2
    assert data["totals"]["with_selection"]["tests_executed"] == 2
    assert data["reduction_ratio"] == 0.0
    assert data["violations"] == 0


NESTED_BODY = """package body Outer is
   package Inner is
      procedure X;
   end Inner;

   package body Inner is
      procedure X is
      begin
         null;
      end X;
   end Inner;

   procedure Y is
   begin
      Inner.X;
   end Y;
end Outer;
"""


def test_nested_package_counts_as_its_library_unit():
    sources = {"outer.ads": "package Outer is\n   procedure Y;\nend Outer;\n", "outer.adb": NESTED_BODY}
    report = replay_experiment(sources, CoverageMap.from_tests({"t": ["outer.inner.x"], "u": ["outer.y"]}))
    assert [(row.subprogram, row.package) for row in report.rows] == [("outer.inner.x", "outer"), ("outer.y", "outer")]
    assert report.units_changed == 1
    assert report.rows[0].selected_tests == ("t",)
