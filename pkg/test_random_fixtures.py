"""Property tests: solver against brute force over seeded random fixtures"""
import pytest

from adl import parse_library, parse_problem
from conftest import parse_pair
from csp import Solver, check_assignment, project, solve_all, solve_first
from emit import check_minion_syntax, emit_minion, pretty_print
from encoder import encode
from oracle import enumerate_configurations, preferred_first
from random_library import MAX_CANDIDATES, MAX_VARIABLES, fixture_size, random_fixture

SEEDS = range(60)


@pytest.fixture(params=SEEDS, ids=lambda s: f"seed{s}")
def fixture(request):
    library_text, problem_text = random_fixture(request.param)
    library, problem = parse_pair(library_text, problem_text)
    return library, problem, encode(library, problem)


def test_fixture_is_deterministic():
    assert random_fixture(7) == random_fixture(7)
    assert random_fixture(7) != random_fixture(8)


def test_fixture_bounds(fixture):
    library, problem, csp = fixture
    variables, _ = fixture_size(library, problem)
    assert variables == len(csp.variables) <= MAX_VARIABLES
    for facility in {f for t in library.templates for f in t.provides}:
        assert sum(1 for t in library.templates if facility in t.provides) <= MAX_CANDIDATES
    assert max(v.depth for v in csp.variables) <= 3


def test_solver_matches_oracle(fixture):
    library, problem, csp = fixture
    found = solve_all(csp)
    assert len(found) == len(set(found))
    assert set(found) == enumerate_configurations(library, problem)


def test_bits_equal_template_sets(fixture):
    library, problem, csp = fixture
    symbols = csp.symbols
    violations = 0
    for assignment in Solver(csp).assignments():
        assert check_assignment(csp, assignment)
        for var in csp.variables:
            code = assignment.components[var.path]
            tmpl = library.template(symbols.implementation(code)) if code else None
            for kind, attribute in (("prop", "properties"), ("prov", "provides")):
                have = set(getattr(tmpl, attribute)) if tmpl else set()
                for bit, name in zip(var.bits(kind), symbols.names(kind)):
                    if assignment.bits[bit] != (1 if name in have else 0):
                        violations += 1
    assert violations == 0


def test_root_propagation_is_sound(fixture):
    library, problem, csp = fixture
    solver = Solver(csp)
    conflict = solver.propagate()
    expected = enumerate_configurations(library, problem)
    if conflict is not None:
        assert expected == set()
        return
    for config in expected:
        chosen = config.as_dict()
        for var in csp.variables:
            name = chosen.get(var.path)
            value = csp.symbols.code(name) if name else 0
            assert solver.state.domains[solver.ids[var.path]] >> value & 1, (var.path, name)


def test_first_solution_is_most_preferred(fixture):
    library, problem, csp = fixture
    symbols = csp.symbols
    prefs = {
        v.path: [symbols.implementation(c) for c in csp.values_in_order(v.path) if c]
        for v in csp.variables
    }
    expected = preferred_first(enumerate_configurations(library, problem), csp.search_order, prefs)
    first = solve_first(csp)
    assert (first if first else None) == expected


def test_projection_keeps_active_paths(fixture):
    _, _, csp = fixture
    for assignment in Solver(csp).assignments():
        config = project(csp, assignment)
        for var in csp.variables:
            active = all(assignment.components[p] == c for p, c in var.prerequisite)
            assert (var.path in config) == active


def test_emitted_model_is_well_formed(fixture):
    _, _, csp = fixture
    assert check_minion_syntax(emit_minion(csp)) == []


def test_dsl_round_trip(fixture):
    library, problem, _ = fixture
    assert parse_library(pretty_print(library))[0] == library
    assert parse_problem(pretty_print(problem))[0] == problem
