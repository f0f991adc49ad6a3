"""Tests for decoding Minion output; the live run needs a Minion binary on PATH"""
import pytest

from csp import check_assignment, first_assignment
from emit import minion_names
from minion_runner import find_minion, parse_minion_solution, run_minion


def solution_line(csp, assignment):
    values = []
    for _, key in minion_names(csp).printed():
        if isinstance(key, str):
            values.append(assignment.components[key])
        elif isinstance(key, tuple) and key[0] == "channel":
            values.append(assignment.channels[key[1]])
        elif isinstance(key, tuple):
            var = csp.variable(key[1])
            values.append(int(assignment.components[var.path] != 0))
        else:
            values.append(assignment.bits[key])
    return "Sol: " + " ".join(str(v) for v in values)


def test_parse_solution_line(solver_csp):
    assignment = first_assignment(solver_csp)
    output = "# Minion Version 1.8\n" + solution_line(solver_csp, assignment) + "\nSolutions Found: 1\n"
    decoded = parse_minion_solution(output, solver_csp)
    assert decoded == assignment
    assert check_assignment(solver_csp, decoded)


def test_parse_without_solution(solver_csp):
    assert parse_minion_solution("Solutions Found: 0\n", solver_csp) is None


def test_parse_rejects_short_line(solver_csp):
    with pytest.raises(ValueError):
        parse_minion_solution("Sol: 1 2 3\n", solver_csp)


def test_find_minion_missing(monkeypatch):
    monkeypatch.setenv("CONFWEAVE_MINION", "definitely-not-a-minion-binary")
    assert find_minion() is None


@pytest.mark.skipif(find_minion() is None, reason="Minion executable not on PATH")
def test_minion_solution_passes_check(solver_csp):
    assignment = run_minion(solver_csp)
    assert assignment is not None
    assert check_assignment(solver_csp, assignment)
