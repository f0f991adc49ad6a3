"""Tests for Minion output, JSON reports and DSL pretty-printing"""
import json

import pytest

from adl import ComponentLibrary, parse_library, parse_problem
from conftest import load_library, load_problem, parse_pair
from csp import solve_all, solve_first
from emit import (
    check_minion_syntax,
    emit_minion,
    emit_report,
    minion_names,
    parse_report,
    pretty_print,
)
from encoder import encode, load_order_file
from errors import EmptyModel

FIXTURE_LIBRARIES = ["solver_library.adl", "no_constant_library.adl"]
FIXTURE_PROBLEMS = ["solver_problem.adl", "unsat_problem.adl"]


def lines_of(text, prefix):
    return [line for line in text.splitlines() if line.startswith(prefix)]


# ==================== MINION ====================
def test_singleton_model():
    csp = encode(*parse_pair("template Only() { provides thing; properties solo; }",
                             "problem One { requires thing t; }"))
    text = emit_minion(csp)
    assert text.splitlines()[0] == "MINION 3"
    assert lines_of(text, "DISCRETE") == [
        "DISCRETE c0 {1..1}",
        "DISCRETE c0_prop[1] {0..1}",
        "DISCRETE c0_prov[1] {0..1}",
    ]
    assert check_minion_syntax(text) == []


def test_library_without_properties_keeps_both_arrays():
    csp = encode(*parse_pair("template Only() { provides thing; }", "problem One { requires thing t; }"))
    text = emit_minion(csp)
    assert lines_of(text, "DISCRETE") == [
        "DISCRETE c0 {1..1}",
        "DISCRETE c0_prop[1] {0..1}",
        "DISCRETE c0_prov[1] {0..1}",
    ]
    assert "eq(c0_prop[0],0)" in text.splitlines()
    assert "eq(c0_prov[0],0)" not in text.splitlines()
    assert check_minion_syntax(text) == []


def test_worked_example_passes_grammar(solver_csp):
    assert check_minion_syntax(emit_minion(solver_csp)) == []


def test_each_channel_has_one_reify_and_one_reifyimply(solver_csp):
    text = emit_minion(solver_csp)
    for channel in solver_csp.channels:
        assert len([l for l in lines_of(text, "reify(") if l.endswith(f",{channel})")]) == 1
        assert len([l for l in lines_of(text, "reifyimply(") if l.endswith(f",{channel})")]) == 1
    assert len(lines_of(text, "reifyimply(")) == len(solver_csp.channels)


def test_membership_uses_watched_or(solver_csp):
    text = emit_minion(solver_csp)
    names = minion_names(solver_csp)
    pvx = names.components["pvx"]
    assert f"reify(watched-or({{eq({pvx},2),eq({pvx},3)}}),{pvx}_prop[2])" in text


def test_domains_with_holes_get_inset(solver_csp):
    text = emit_minion(solver_csp)
    names = minion_names(solver_csp)
    mem = names.components["pvx=BoolVar/mem"]
    assert f"DISCRETE {mem} {{0..6}}" in text
    assert f"w-inset({mem},[0,6])" in text
    assert not any(l.startswith(f"w-inset({names.components['sum1']},") for l in text.splitlines())


def test_search_section_follows_order(solver_csp, fixtures_dir):
    csp = load_order_file(fixtures_dir / "prefer_boolvar_order.json", solver_csp)
    text = emit_minion(csp)
    pvw = minion_names(csp).components["pvw"]
    assert lines_of(text, "VARORDER [")[0].startswith(f"VARORDER [{pvw},c0,")
    assert f"#VALPREF {pvw} 2,1,3" in text
    assert check_minion_syntax(text) == []


def test_emit_is_deterministic(solver_csp):
    first = emit_minion(solver_csp)
    assert first == emit_minion(solver_csp)
    assert "\r" not in first


def test_unsat_model_is_still_emitted(unsat_pair):
    text = emit_minion(encode(*unsat_pair))
    assert check_minion_syntax(text) == []


def test_empty_model_is_rejected():
    library, problem = parse_pair("template A() { provides f; }", "problem Empty { }")
    with pytest.raises(EmptyModel):
        emit_minion(encode(library, problem))


@pytest.mark.parametrize("text,fragment", [
    ("**VARIABLES**\n**SEARCH**\n**CONSTRAINTS**\n**EOF**\n", "expected 'MINION 3'"),
    ("MINION 3\n**VARIABLES**\nDISCRETE a {0..1}\n**SEARCH**\n**CONSTRAINTS**\neq(b,1)\n**EOF**\n",
     "undeclared variable b"),
    ("MINION 3\n**VARIABLES**\nDISCRETE a {0..1}\n**SEARCH**\n**CONSTRAINTS**\nsumleq(a,1)\n**EOF**\n",
     "unknown constraint 'sumleq'"),
    ("MINION 3\n**SEARCH**\n**VARIABLES**\n**CONSTRAINTS**\n**EOF**\n", "out of order"),
    ("MINION 3\n**VARIABLES**\nDISCRETE a[2] {0..1}\n**SEARCH**\n**CONSTRAINTS**\neq(a[2],1)\n**EOF**\n",
     "undeclared variable a[2]"),
    ("MINION 3\n**VARIABLES**\nDISCRETE a {0..1}\n**SEARCH**\n**CONSTRAINTS**\neq(a,1\n**EOF**\n",
     "expected ')'"),
])
def test_grammar_checker_rejects(text, fragment):
    errors = check_minion_syntax(text)
    assert errors
    assert any(fragment in e for e in errors)


# ==================== REPORT ====================
def test_empty_report():
    text = emit_report([])
    assert json.loads(text) == [{"count": 0}]
    assert parse_report(text) == []


def test_report_round_trip(solver_csp):
    configurations = solve_all(solver_csp, limit=20)
    assert parse_report(emit_report(configurations)) == configurations


def test_report_matches_golden_bytes(solver_csp, fixtures_dir):
    assert emit_report([solve_first(solver_csp)]) == (fixtures_dir / "solver_golden.json").read_text()


def test_report_entries_sorted_by_path(solver_csp):
    doc = json.loads(emit_report([solve_first(solver_csp)]))
    paths = [item["path"] for item in doc[0]]
    assert paths == sorted(paths)
    assert list(doc[0][0]) == ["path", "implementation"]
    assert doc[-1] == {"count": 1}


def test_report_count_mismatch_is_rejected():
    with pytest.raises(ValueError):
        parse_report('[[{"path": "a", "implementation": "A"}], {"count": 2}]')


# ==================== DSL ====================
def test_pretty_print_empty_library():
    assert pretty_print(ComponentLibrary()) == ""


def test_pretty_print_memory_manager():
    library, _ = parse_library("template MemoryManager() { provides memory; }")
    assert pretty_print(library) == "template MemoryManager() {\n    provides memory;\n}\n"


def test_pretty_print_separates_templates():
    library, _ = parse_library("template A() { provides f; } template B(x) { provides g; properties p, q; }")
    assert pretty_print(library) == (
        "template A() {\n    provides f;\n}\n"
        "\n"
        "template B(x) {\n    provides g;\n    properties p, q;\n}\n"
    )


@pytest.mark.parametrize("name", FIXTURE_LIBRARIES)
def test_library_round_trip(name):
    library = load_library(name)
    again, diags = parse_library(pretty_print(library))
    assert diags == []
    assert again == library


@pytest.mark.parametrize("name", FIXTURE_PROBLEMS)
def test_problem_round_trip(name):
    problem = load_problem(name)
    again, diags = parse_problem(pretty_print(problem))
    assert diags == []
    assert again == problem
