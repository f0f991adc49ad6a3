"""Brute-force reference semantics for a library and problem.

Walks every total choice of implementations over the active requirement
paths and keeps the choices under which every check holds, reading the
checks straight off the templates' property and provides sets. Nothing
here goes through the constraint model, so the result can be compared
against the solver's enumeration.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from adl import Configuration, Scope, SetLiteral, SetRef, SubsetOf, format_check
from errors import DepthExceeded

logger = logging.getLogger(__name__)

DEFAULT_DEPTH_LIMIT = 4


@dataclass(frozen=True)
class CandidateTree:
    """Candidates for one requirement path; children keyed by candidate name."""
    path: str
    facility: str
    candidates: tuple
    depth: int = 1
    children: dict = field(default_factory=dict, compare=False)

    def walk(self):
        yield self
        for subtrees in self.children.values():
            for sub in subtrees:
                yield from sub.walk()


def _providers(library, facility):
    return tuple(t.name for t in library.templates if facility in t.provides)


def build_candidate_tree(library, problem, depth_limit=DEFAULT_DEPTH_LIMIT):
    """One tree per top-level requirement, expanded to the same depth limit as the encoder."""
    if depth_limit < 1:
        raise ValueError("depth_limit must be >= 1")

    def build(path, facility, depth):
        children = {}
        for name in _providers(library, facility):
            tmpl = library.template(name)
            if not tmpl.requires:
                continue
            if depth >= depth_limit:
                raise DepthExceeded(f"{path}={name}", depth_limit)
            children[name] = tuple(
                build(f"{path}={name}/{r.name}", r.facility, depth + 1) for r in tmpl.requires
            )
        return CandidateTree(path, facility, _providers(library, facility), depth, children)

    return tuple(build(r.name, r.facility, 1) for r in problem.requires)


def _choices(trees):
    """Every total choice over the active paths of a forest, as dicts."""
    if not trees:
        yield {}
        return
    head, rest = trees[0], trees[1:]
    for name in head.candidates:
        below = head.children.get(name, ())
        for picked in _choices(tuple(below) + tuple(rest)):
            yield {head.path: name, **picked}


# ==================== CHECK SEMANTICS ====================
def _attr(template, attribute):
    return set(getattr(template, attribute))


def _demands(template, param):
    """(required, allowed) per attribute for whatever is passed as param."""
    required = {"properties": set(), "provides": set()}
    allowed = {"properties": None, "provides": None}
    for chk in template.checks:
        if not isinstance(chk, SubsetOf):
            continue
        if isinstance(chk.lhs, SetLiteral) and isinstance(chk.rhs, SetRef) and chk.rhs.entity == (param,):
            required[chk.rhs.attribute] |= set(chk.lhs.names)
        elif isinstance(chk.rhs, SetLiteral) and isinstance(chk.lhs, SetRef) and chk.lhs.entity == (param,):
            names = set(chk.rhs.names)
            prev = allowed[chk.lhs.attribute]
            allowed[chk.lhs.attribute] = names if prev is None else prev & names
    return required, allowed


def _fits(candidate, demand_owner, param, extra_properties):
    required, allowed = _demands(demand_owner, param)
    props = _attr(candidate, "properties")
    provs = _attr(candidate, "provides")
    if not required["properties"] <= props | set(extra_properties):
        return False
    if not required["provides"] <= provs:
        return False
    if allowed["properties"] is not None and not props <= allowed["properties"]:
        return False
    if allowed["provides"] is not None and not provs <= allowed["provides"]:
        return False
    return True


def _check_holds(library, chk, scope, paths, chosen, owner):
    if isinstance(chk, SubsetOf):
        literal_left = isinstance(chk.lhs, SetLiteral)
        literal, ref = (chk.lhs, chk.rhs) if literal_left else (chk.rhs, chk.lhs)
        resolved = scope.resolve(ref.entity)
        if resolved is None or resolved.kind != "requirement":
            return True
        actual = _attr(library.template(chosen[paths[resolved.requirement]]), ref.attribute)
        if literal_left:
            return set(literal.names) <= actual
        return actual <= set(literal.names)

    slot = scope.resolve(chk.slot)
    candidate = library.template(chosen[paths[scope.resolve(chk.candidate).requirement]])
    if slot.kind == "param":
        return _fits(candidate, owner, slot.param, chk.extra_properties)
    implementer = library.template(chosen[paths[slot.requirement]])
    if slot.param not in implementer.params:
        return True
    return _fits(candidate, implementer, slot.param, chk.extra_properties)


def configuration_violations(library, problem, chosen):
    """Checks that fail under a total choice {path: implementation}, as messages."""
    violations = []
    problem_paths = {r.name: r.name for r in problem.requires}
    scope = Scope.for_problem(problem)
    for chk in problem.checks:
        if not _check_holds(library, chk, scope, problem_paths, chosen, None):
            violations.append(f"problem '{problem.name}': {format_check(chk)}")
    for path, name in chosen.items():
        tmpl = library.template(name)
        if not tmpl.checks:
            continue
        paths = {r.name: f"{path}={name}/{r.name}" for r in tmpl.requires}
        scope = Scope.for_template(tmpl)
        for chk in tmpl.checks:
            if not _check_holds(library, chk, scope, paths, chosen, tmpl):
                violations.append(f"{path}={name}: {format_check(chk)}")
    return violations


def enumerate_configurations(library, problem, depth_limit=DEFAULT_DEPTH_LIMIT):
    """Every configuration satisfying all checks, as a set."""
    trees = build_candidate_tree(library, problem, depth_limit)
    found = set()
    examined = 0
    for chosen in _choices(trees):
        examined += 1
        if not configuration_violations(library, problem, chosen):
            found.add(Configuration.from_mapping(chosen))
    logger.debug("Oracle examined %d total choices, %d valid", examined, len(found))
    return found


def _tree_choices(tree):
    total = 0
    for name in tree.candidates:
        below = 1
        for sub in tree.children.get(name, ()):
            below *= _tree_choices(sub)
        total += below
    return total


def count_total_choices(library, problem, depth_limit=DEFAULT_DEPTH_LIMIT):
    """Size of the brute-force search space, counted without enumerating it."""
    total = 1
    for tree in build_candidate_tree(library, problem, depth_limit):
        total *= _tree_choices(tree)
    return total


def rank_key(configuration, order, preferences):
    """Sort key that ranks configurations lexicographically by path order and value preference.

    preferences maps path -> ordered implementation names; an absent path ranks before any choice.
    """
    choice = configuration.as_dict()
    key = []
    for path in order:
        name = choice.get(path)
        prefs = preferences.get(path, ())
        key.append(-1 if name is None else prefs.index(name) if name in prefs else len(prefs))
    return tuple(key)


def preferred_first(configurations, order, preferences):
    return min(configurations, key=lambda c: rank_key(c, order, preferences), default=None)
