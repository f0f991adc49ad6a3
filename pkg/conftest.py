from pathlib import Path

import pytest

import adl
import encoder

FIXTURES = Path(__file__).parent / "fixtures"


def load_library(*names):
    libraries = []
    for name in names:
        library, diags = adl.parse_library((FIXTURES / name).read_text(encoding="utf-8"), name)
        assert not adl.has_errors(diags), [str(d) for d in diags]
        libraries.append(library)
    library, diags = adl.merge_libraries(libraries)
    assert not diags
    return library


def load_problem(name):
    problem, diags = adl.parse_problem((FIXTURES / name).read_text(encoding="utf-8"), name)
    assert not adl.has_errors(diags), [str(d) for d in diags]
    return problem


def parse_pair(library_text, problem_text):
    """Parse DSL text that is expected to be error-free."""
    library, diags = adl.parse_library(library_text)
    assert not adl.has_errors(diags), [str(d) for d in diags]
    problem, diags = adl.parse_problem(problem_text)
    assert not adl.has_errors(diags), [str(d) for d in diags]
    diags = adl.validate(library, problem)
    assert not adl.has_errors(diags), [str(d) for d in diags]
    return library, problem


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def solver_library():
    return load_library("solver_library.adl")


@pytest.fixture
def solver_problem():
    return load_problem("solver_problem.adl")


@pytest.fixture
def solver_csp(solver_library, solver_problem):
    return encoder.encode(solver_library, solver_problem)


@pytest.fixture
def unsat_pair():
    return load_library("no_constant_library.adl"), load_problem("unsat_problem.adl")


SINGLETON_LIBRARY = """
template Only() {
    provides thing;
}
"""

SINGLETON_PROBLEM = """
problem One {
    requires thing t;
}
"""


@pytest.fixture
def singleton_pair():
    return parse_pair(SINGLETON_LIBRARY, SINGLETON_PROBLEM)
