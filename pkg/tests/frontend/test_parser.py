import pytest

from adaimpact import ParseError, SourceUnit, SubprogramKind, UnitKind, parse_sources, parse_unit
from adaimpact.errors import SourceError

from ..helpers import FIXTURES, fixture_snapshot, fixture_unit


def parse_text(path, text):
    return parse_unit(SourceUnit.from_text(path, text))


def names(unit):
    return [subprogram.qualified_name for subprogram in unit.subprograms]


def test_source_unit_header():
    unit = fixture_unit("fig3", "a.adb")
    assert unit.path == "a.adb"
    assert unit.kind == UnitKind.BODY
    assert unit.package_name == "a"


def test_package_body_with_withs_and_subprogram():
    unit = parse_unit(fixture_unit("fig3", "a.adb"))
    assert unit.kind == UnitKind.BODY
    assert unit.package_name == "a"
    assert unit.withs == {"b"}
    assert names(unit) == ["a.foo"]
    assert unit.subprograms[0].kind == SubprogramKind.FUNCTION

    package = fixture_snapshot("fig3").packages["a"]
    assert package.body_withs == {"b"}
    assert package.spec_withs == frozenset()
    assert package.subprogram_names == ["a.foo"]


def test_peano_body():
    package = fixture_snapshot("peano").packages["peano"]
    assert package.subprogram_names == ["peano.zero", "peano.succ", "peano.one"]
    assert package.spec_declarations == {"peano.zero", "peano.succ", "peano.one"}


def test_empty_spec():
    snapshot = parse_sources({"e.ads": "package E is end E;"})
    package = snapshot.packages["e"]
    assert package.name == "e"
    assert package.spec_withs == frozenset()
    assert package.subprograms == ()
    assert package.has_spec
    assert not package.has_body


def test_spec_declares_but_does_not_record_subprograms():
    unit = parse_text("p.ads", "package P is\n   procedure X;\n   function Y return Integer;\nend P;\n")
    assert unit.subprograms == ()
    assert unit.declarations == {"p.x", "p.y"}


def test_body_span_and_statements_offset():
    text = (FIXTURES / "fig3" / "b.adb").read_text()
    subprogram = parse_text("b.adb", text).subprograms[0]
    start, end = subprogram.body_span
    assert text[start:end].startswith("function Bar")
    assert text[start:end].endswith("end Bar;")
    assert subprogram.statements_offset is not None
    assert text[subprogram.statements_offset - 5 : subprogram.statements_offset] == "begin"


def test_nested_packages_are_qualified():
    text = """
package body Outer is
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
    assert names(parse_text("outer.adb", text)) == ["outer.inner.x", "outer.y"]


def test_nested_subprograms_belong_to_their_parent():
    text = """
package body N is
   procedure Outer is
      procedure Helper is
      begin
         null;
      end Helper;
   begin
      Helper;
   end Outer;
end N;
"""
    unit = parse_text("n.adb", text)
    assert names(unit) == ["n.outer"]
    offset = unit.subprograms[0].statements_offset
    assert text[offset:].lstrip().startswith("Helper;")


def test_protected_objects_are_opaque():
    unit = parse_unit(fixture_unit("demo", "conditions.adb"))
    assert names(unit) == [
        "conditions.set_flag",
        "conditions.clear_flag",
        "conditions.is_set",
        "conditions.count_set",
        "conditions.reset_all",
    ]


def test_task_body_is_opaque():
    text = """
package body Workers is
   task body Worker is
      procedure Step is
      begin
         null;
      end Step;
   begin
      loop
         accept Start do
            Step;
         end Start;
      end loop;
   end Worker;

   procedure Run is
   begin
      null;
   end Run;
end Workers;
"""
    assert names(parse_text("workers.adb", text)) == ["workers.run"]


def test_overloads_get_ordinals():
    text = """
package body O is
   procedure Put (X : Integer) is begin null; end Put;
   procedure Put (X : Float) is begin null; end Put;
   procedure Other is begin null; end Other;
end O;
"""
    assert names(parse_text("o.adb", text)) == ["o.put#1", "o.put#2", "o.other"]


def test_null_procedure_and_expression_function():
    text = """
package body P is
   procedure Nothing is null;
   function Twice (X : Integer) return Integer is (X * 2);
end P;
"""
    unit = parse_text("p.adb", text)
    assert names(unit) == ["p.nothing", "p.twice"]
    assert [subprogram.kind for subprogram in unit.subprograms] == [SubprogramKind.PROCEDURE, SubprogramKind.FUNCTION]
    assert all(subprogram.statements_offset is None for subprogram in unit.subprograms)


def test_imported_subprogram_is_not_recorded():
    unit = parse_unit(fixture_unit("demo", "sys_calls.adb"))
    assert "sys_calls.c_getpid" not in names(unit)
    assert unit.withs == {"ada.environment_variables", "interfaces.c"}


def test_instantiation_adds_the_generic_to_withs():
    text = """
package body I is
   package Lists is new Gen (Element_Type => Integer);
end I;
"""
    assert parse_text("i.adb", text).withs == {"gen"}


def test_library_level_instantiation():
    unit = parse_text("int_lists.ads", "with Gen;\npackage Int_Lists is new Gen (Integer);\n")
    assert unit.kind == UnitKind.SPEC
    assert unit.package_name == "int_lists"
    assert unit.withs == {"gen"}
    assert unit.subprograms == ()


def test_generic_package_with_formal_subprogram():
    text = """
generic
   type T is private;
   with function "<" (Left, Right : T) return Boolean;
package Sorting is
   procedure Sort;
end Sorting;
"""
    unit = parse_text("sorting.ads", text)
    assert unit.package_name == "sorting"
    assert unit.declarations == {"sorting.sort"}


def test_child_package_depends_on_parent():
    snapshot = parse_sources({"a-b.ads": "package A.B is\nend A.B;\n"})
    assert snapshot.packages["a.b"].spec_withs == {"a"}


def test_context_clause_variants():
    text = "limited with A;\nprivate with B;\nwith C, D.E;\nuse C;\npragma Elaborate_Body;\npackage P is\nend P;\n"
    assert parse_text("p.ads", text).withs == {"a", "b", "c", "d.e"}


@pytest.mark.parametrize(
    "path,text,message",
    [
        ("s.adb", "package body S is\n   procedure X is separate;\nend S;\n", "Separate subunits"),
        ("s-x.adb", "separate (S)\nprocedure X is\nbegin\n   null;\nend X;\n", "Separate subunits"),
        ("main.adb", "procedure Main is\nbegin\n   null;\nend Main;\n", "Library-level subprogram"),
        ("g.ads", "generic\n   type T is private;\nprocedure G (X : T);\n", "Generic subprogram"),
    ],
)
def test_unsupported_units(path, text, message):
    with pytest.raises(ParseError, match=message):
        parse_text(path, text)


def test_mismatched_end_name():
    text = "package body M is\n   procedure X is\n   begin\n      null;\n   end Y;\nend M;\n"
    with pytest.raises(ParseError) as exc_info:
        parse_text("m.adb", text)
    assert exc_info.value.subprogram == "x"
    assert exc_info.value.line == 5
    assert "does not match" in str(exc_info.value)


def test_missing_end_if():
    text = "package body M is\n   procedure X is\n   begin\n      if True then\n         null;\n   end X;\nend M;\n"
    with pytest.raises(ParseError, match="Missing `end if`"):
        parse_text("m.adb", text)


def test_unclosed_package():
    with pytest.raises(ParseError, match="not closed"):
        parse_text("m.ads", "package M is\n   procedure X;\n")


def test_parse_errors_are_source_errors():
    with pytest.raises(SourceError):
        parse_text("m.ads", "package M is\nend N;\n")


def test_unit_declaring_another_package():
    unit = SourceUnit(path="x.ads", kind=UnitKind.SPEC, package_name="x", text="package Y is\nend Y;\n")
    with pytest.raises(ParseError, match="expected Spec x"):
        parse_unit(unit)


def test_residue_ignores_subprogram_bodies():
    first = parse_text("p.adb", "package body P is\n   procedure X is\n   begin\n      null;\n   end X;\nend P;\n")
    second = parse_text("p.adb", "package body P is\n   procedure X is\n   begin\n      X;\n   end X;\nend P;\n")
    assert first.residue_hash == second.residue_hash
    assert first.subprograms[0].normalized_hash != second.subprograms[0].normalized_hash
