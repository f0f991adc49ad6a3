"""
Seeded random libraries and problems for property tests.

Facilities come in three layers (top, mid, leaf) so requirement chains are
at most three deep and acyclic. Fixtures that expand beyond the size bounds
are regenerated from the same random stream, so a seed always yields the
same pair of DSL texts.
"""
import random

from adl import Accepts, ComponentLibrary, ProblemSpec, Requirement, SetLiteral, SetRef, SubsetOf, Template
from emit import pretty_print
from oracle import build_candidate_tree, count_total_choices

PROPERTIES = ("p0", "p1", "p2", "p3", "p4")
UNUSED_PROPERTY = "pz"  # never given to a template
MAX_VARIABLES = 12
MAX_CANDIDATES = 4
MAX_CHOICES = 5000
MAX_ATTEMPTS = 200


def _props(rng, low=0, high=3):
    picked = rng.sample(PROPERTIES, rng.randint(low, high))
    return tuple(p for p in PROPERTIES if p in picked)


def _check_props(rng):
    pool = PROPERTIES + (UNUSED_PROPERTY,) if rng.random() < 0.1 else PROPERTIES
    picked = rng.sample(pool, rng.randint(1, 2))
    return tuple(p for p in pool if p in picked)


def _bound_checks(rng, entity):
    """Random lower/upper bound checks on entity's properties."""
    checks = []
    if rng.random() < 0.45:
        checks.append(SubsetOf(SetLiteral(_check_props(rng)), SetRef((entity,), "properties")))
    if rng.random() < 0.2:
        checks.append(SubsetOf(SetRef((entity,), "properties"), SetLiteral(_props(rng, 1, 4))))
    return checks


def _templates(rng, prefix, facility, sub_facility, allow_params, top_facilities=()):
    out = []
    for k in range(rng.randint(1, 3)):
        params = ()
        if allow_params and rng.random() < 0.6:
            params = ("x",) if rng.random() < 0.6 else ("x", "y")
        provides = (facility,)
        others = [f for f in top_facilities if f != facility]
        if others and rng.random() < 0.15:
            provides += (rng.choice(others),)
        requires = ()
        if sub_facility and rng.random() < 0.5:
            requires = (Requirement(sub_facility, "sub"),)
        checks = []
        for p in params:
            checks += _bound_checks(rng, p)
        if requires:
            checks += _bound_checks(rng, "sub")
            if params and rng.random() < 0.4:
                checks.append(Accepts((rng.choice(params),), ("sub",)))
        out.append(Template(f"{prefix}{k}", params, provides, _props(rng), requires, tuple(checks)))
    return out


def _generate(rng):
    n_top = rng.randint(1, 3)
    n_mid = rng.randint(0, 2)
    has_leaf = n_mid > 0 and rng.random() < 0.5
    tops = [f"T{i}" for i in range(n_top)]
    mids = [f"M{i}" for i in range(n_mid)]

    templates = []
    if has_leaf:
        templates += _templates(rng, "Leaf", "L0", None, False)
    for i, facility in enumerate(mids):
        templates += _templates(rng, f"Mid{i}_", facility, "L0" if has_leaf else None, True)
    for i, facility in enumerate(tops):
        sub = rng.choice(mids) if mids else None
        templates += _templates(rng, f"Top{i}_", facility, sub, True, tops)
    library = ComponentLibrary(tuple(templates))

    reqs = tuple(Requirement(rng.choice(tops), f"r{i}") for i in range(rng.randint(2, 5)))
    checks = []
    for req in reqs:
        checks += _bound_checks(rng, req.name) if rng.random() < 0.5 else []
        if rng.random() < 0.1:
            checks.append(SubsetOf(SetRef((req.name,), "provides"), SetLiteral(tuple(tops))))
    for a in reqs:
        params = sorted({p for t in library.templates if a.facility in t.provides for p in t.params})
        for b in reqs:
            if a is b or not params or rng.random() < 0.6:
                continue
            extra = _check_props(rng) if rng.random() < 0.2 else ()
            checks.append(Accepts((a.name, rng.choice(params)), (b.name,), extra))
    return library, ProblemSpec("Random", reqs, tuple(checks))


def fixture_size(library, problem):
    """(component variables, total brute-force choices) of a fixture."""
    trees = build_candidate_tree(library, problem)
    variables = sum(1 for tree in trees for _ in tree.walk())
    return variables, count_total_choices(library, problem)


def _within_bounds(library, problem):
    for facility in {f for t in library.templates for f in t.provides}:
        if sum(1 for t in library.templates if facility in t.provides) > MAX_CANDIDATES:
            return False
    variables, choices = fixture_size(library, problem)
    return variables <= MAX_VARIABLES and choices <= MAX_CHOICES


def random_fixture(seed):
    """(library text, problem text) for a seed."""
    rng = random.Random(seed)
    for _ in range(MAX_ATTEMPTS):
        library, problem = _generate(rng)
        if _within_bounds(library, problem):
            return pretty_print(library), pretty_print(problem)
    raise RuntimeError(f"no fixture within bounds for seed {seed}")
