"""Tests for the description-language front end"""
import pytest

import adl
from adl import (
    Accepts,
    ComponentLibrary,
    SetLiteral,
    SetRef,
    SubsetOf,
    Template,
    has_errors,
    parse_library,
    parse_problem,
    tokenize,
    validate,
)
from conftest import load_library, load_problem


def errors_of(diags):
    return [d.message for d in diags if d.severity == adl.ERROR]


def warnings_of(diags):
    return [d.message for d in diags if d.severity == adl.WARNING]


# ==================== TOKENIZER ====================
def test_tokenize_empty():
    tokens, diags = tokenize("")
    assert tokens == []
    assert diags == []


def test_tokenize_template_header():
    tokens, diags = tokenize("template M() { provides memory; }")
    assert [str(t) for t in tokens] == [
        "kw:template", "ident:M", "lparen", "rparen", "lbrace",
        "kw:provides", "ident:memory", "semi", "rbrace",
    ]
    assert diags == []


def test_tokenize_illegal_character():
    tokens, diags = tokenize("$")
    assert tokens == []
    assert [d.message for d in diags] == ["illegal character '$' at 1:1"]
    assert diags[0].severity == adl.ERROR


def test_tokenize_skips_comments_and_tracks_positions():
    tokens, _ = tokenize("// header\n  provides x; // trailing\n", "f.adl")
    assert [t.text for t in tokens] == ["provides", "x", ";"]
    assert (tokens[0].span.line, tokens[0].span.column) == (2, 3)
    assert str(tokens[1].span) == "f.adl:2:12"


def test_tokenize_continues_after_illegal_character():
    tokens, diags = tokenize("a # b")
    assert [t.text for t in tokens] == ["a", "b"]
    assert len(diags) == 1


# ==================== LIBRARY ====================
def test_parse_memory_manager():
    library, diags = parse_library("template MemoryManager() { provides memory; }")
    assert diags == []
    assert library.templates == (Template("MemoryManager", (), ("memory",), (), (), ()),)


def test_parse_empty_library():
    library, diags = parse_library("")
    assert len(library) == 0
    assert diags == []


def test_parse_full_template():
    text = """
    template GacSum(x, y) {
        provides IConstraint;
        properties gac;
        requires memory mem;
        check {removable_values} subsetof x.properties;
        check x accepts mem with {a, b};
        check mem.provides subsetof {memory};
    }
    """
    library, diags = parse_library(text)
    assert diags == []
    tmpl = library.template("GacSum")
    assert tmpl.params == ("x", "y")
    assert tmpl.properties == ("gac",)
    assert tmpl.requirement("mem").facility == "memory"
    assert tmpl.checks == (
        SubsetOf(SetLiteral(("removable_values",)), SetRef(("x",), "properties")),
        Accepts(("x",), ("mem",), ("a", "b")),
        SubsetOf(SetRef(("mem",), "provides"), SetLiteral(("memory",))),
    )


def test_template_order_is_declaration_order(solver_library):
    assert [t.name for t in solver_library.templates] == [
        "ConstantVar", "BoolVar", "DiscreteVar", "GacSum", "BoolSum", "MemoryManager",
    ]


def test_duplicate_template_is_error():
    library, diags = parse_library("template A() { provides f; } template A() { provides g; }")
    assert len(library) == 1
    assert len(errors_of(diags)) == 1
    assert "duplicate template 'A'" in errors_of(diags)[0]


def test_missing_provides_is_error():
    _, diags = parse_library("template A() { properties p; }")
    assert errors_of(diags) == ["template 'A' has no 'provides' clause"]


def test_clause_out_of_order():
    _, diags = parse_library("template A() { properties p; provides f; }")
    assert errors_of(diags) == ["'provides' clause out of order in template 'A'"]


def test_recovery_reports_several_errors():
    text = """
    template A() {
        provides ;
        requires memory;
        check x accepts;
    }
    template B() { provides f; }
    """
    library, diags = parse_library(text)
    assert len(errors_of(diags)) >= 3
    assert library.template("B") is not None


def test_unresolved_reference_in_template():
    _, diags = parse_library("template A() { provides f; check {p} subsetof q.properties; }")
    assert errors_of(diags) == ["unknown requirement or parameter 'q' in template 'A'"]


def test_diagnostic_rendering():
    _, diags = parse_library("template A() {\n  provides f\n}", "lib.adl")
    assert str(diags[0]).startswith("lib.adl:3:1: error: expected ';'")


def test_diagnostic_spans_within_input():
    text = "template A( { provides ; }\ntemplate"
    _, diags = parse_library(text, "x.adl")
    lines = text.split("\n")
    assert diags
    for d in diags:
        assert 1 <= d.span.line <= len(lines)
        assert 1 <= d.span.column <= len(lines[d.span.line - 1]) + 1


def test_parse_is_deterministic(fixtures_dir):
    text = (fixtures_dir / "solver_library.adl").read_text()
    assert parse_library(text) == parse_library(text)


# ==================== PROBLEM ====================
def test_parse_sum_problem(solver_problem):
    assert solver_problem.name == "SumProblem"
    variables = [r.name for r in solver_problem.requires if r.facility == "IPropVariable"]
    constraints = [r.name for r in solver_problem.requires if r.facility == "IConstraint"]
    assert variables == ["pvx", "pvy", "pvz", "pvw", "pvc6"]
    assert constraints == ["sum1", "sum2"]
    assert len(solver_problem.checks) == 7


def test_problem_without_requirements_warns():
    problem, diags = parse_problem("problem Empty { }")
    assert problem.name == "Empty"
    assert problem.requires == ()
    assert not has_errors(diags)
    assert warnings_of(diags) == ["problem 'Empty' has no requirements"]


def test_problem_unknown_requirement_in_check():
    _, diags = parse_problem("problem P { requires f a; check {p} subsetof ghost.properties; }")
    assert errors_of(diags) == ["unknown requirement 'ghost' in problem 'P'"]


def test_problem_trailing_input():
    _, diags = parse_problem("problem P { requires f a; } template")
    assert errors_of(diags) == ["unexpected 'template' after problem 'P'"]


# ==================== MERGE ====================
def test_merge_libraries_concatenates_and_flags_duplicates():
    first, _ = parse_library("template A() { provides f; }")
    second, _ = parse_library("template B() { provides g; } template A() { provides h; }")
    merged, diags = adl.merge_libraries([first, second])
    assert [t.name for t in merged.templates] == ["A", "B"]
    assert len(errors_of(diags)) == 1
    assert merged.template("A").provides == ("f",)


# ==================== VALIDATION ====================
def test_worked_example_validates_cleanly(solver_library, solver_problem):
    assert not has_errors(validate(solver_library, solver_problem))


def test_missing_provider():
    library, _ = parse_library("template A() { provides f; }")
    problem, _ = parse_problem("problem P { requires teleport t; }")
    assert errors_of(validate(library, problem)) == ["no implementation provides 'teleport'"]


def test_self_cycle_is_warning():
    library, _ = parse_library("template A() { provides f; requires f again; }")
    problem, _ = parse_problem("problem P { requires f a; }")
    diags = validate(library, problem)
    assert not has_errors(diags)
    assert "cyclic requirement chain: A -> A" in warnings_of(diags)


def test_accepts_slot_must_be_a_parameter():
    library = load_library("solver_library.adl")
    problem, _ = parse_problem("problem P { requires IConstraint s; requires IPropVariable v; check s.z accepts v; }")
    assert errors_of(validate(library, problem)) == ["no implementation of 's' takes parameter 'z'"]


def test_subsetof_between_literals_is_error():
    library, _ = parse_library("template A() { provides f; }")
    problem, _ = parse_problem("problem P { requires f a; check {x} subsetof {y}; }")
    assert len(errors_of(validate(library, problem))) == 1


def test_unused_template_warning():
    library, _ = parse_library("template A() { provides f; } template B() { provides g; }")
    problem, _ = parse_problem("problem P { requires f a; }")
    assert warnings_of(validate(library, problem)) == ["template 'B' provides nothing that is required"]


# ==================== SCOPES ====================
@pytest.mark.parametrize("ref,kind", [
    (("mem",), "requirement"),
    (("x",), "param"),
    (("mem", "x"), "slot"),
    (("nothing",), None),
    (("mem", "x", "y"), None),
])
def test_scope_resolution(solver_library, ref, kind):
    scope = adl.Scope.for_template(solver_library.template("GacSum"))
    resolved = scope.resolve(ref)
    assert (resolved.kind if resolved else None) == kind


def test_spans_do_not_affect_equality():
    a, _ = parse_library("template A() { provides f; }")
    b, _ = parse_library("\n\n  template A()\n{ provides f; }")
    assert a == b
    assert isinstance(a, ComponentLibrary)


def test_unsat_fixture_validates(unsat_pair):
    library, problem = unsat_pair
    assert not has_errors(validate(library, problem))


def test_fixture_loader_reads_problem():
    assert load_problem("unsat_problem.adl").name == "ForcedBoolSum"
