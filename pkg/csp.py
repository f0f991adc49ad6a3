"""Propagation and chronological backtracking over a compiled ConfigCsp.

Domains are integer bitsets (bit v set = value v still possible). Every
constraint kind has a propagator that enforces domain consistency; search
assigns component variables in the model's static order (or
smallest-domain-first when dynamic ordering is requested) and tries values
in preference order.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass

from adl import Configuration
from encoder import (
    ChannelImply,
    ChannelReify,
    ForceBit,
    GuardedImplication,
    IffMembership,
    SENTINEL,
    SentinelLink,
    describe_constraint,
)
from errors import MalformedAssignment

logger = logging.getLogger(__name__)

BOOL_DOMAIN = 0b11
ZERO = 0b01
ONE = 0b10


def _bit(value):
    return 1 << value


def _mask(values):
    out = 0
    for v in values:
        out |= 1 << v
    return out


def _single_value(mask):
    return mask.bit_length() - 1


# ==================== RESULT TYPES ====================
@dataclass(frozen=True)
class Assignment:
    components: dict
    bits: dict
    channels: dict


@dataclass(frozen=True)
class Conflict:
    constraint_id: int
    description: str

    def __str__(self):
        return f"conflict in constraint #{self.constraint_id}: {self.description}"


@dataclass(frozen=True)
class Unsat:
    reason: str = ""

    def __bool__(self):
        return False


@dataclass
class SearchStats:
    nodes: int = 0
    failures: int = 0
    solutions: int = 0


# ==================== STATE ====================
class SearchState:
    """Current domains plus a trail that restores any earlier decision level."""

    def __init__(self, domains):
        self.domains = list(domains)
        self.trail = []
        self.level_marks = []

    @property
    def level(self):
        return len(self.level_marks)

    def set(self, var, mask):
        """Narrow a domain. Returns False when it becomes empty."""
        old = self.domains[var]
        if mask == old:
            return True
        self.trail.append((var, old))
        self.domains[var] = mask
        return mask != 0

    def restrict(self, var, mask):
        return self.set(var, self.domains[var] & mask)

    def push_level(self):
        self.level_marks.append(len(self.trail))

    def pop_level(self):
        mark = self.level_marks.pop()
        while len(self.trail) > mark:
            var, old = self.trail.pop()
            self.domains[var] = old


# ==================== PROPAGATORS ====================
def _entailed(dom, lit):
    var, val = lit
    return dom[var] == _bit(val)


def _possible(dom, lit):
    var, val = lit
    return bool(dom[var] & _bit(val))


def _implication(state, guard, consequents):
    """guard (conjunction) => consequents (conjunction)."""
    dom = state.domains
    if not all(_possible(dom, lit) for lit in guard):
        return True
    open_lits = [lit for lit in guard if not _entailed(dom, lit)]
    blocked = any(not _possible(dom, lit) for lit in consequents)
    if not open_lits:
        if blocked:
            return False
        return all(state.set(var, _bit(val)) for var, val in consequents)
    if blocked and len(open_lits) == 1:
        var, val = open_lits[0]
        return state.restrict(var, ~_bit(val))
    return True


def _equivalence(state, flag_true, flag_false, flag_is_true, flag_is_false, guard):
    """A single 0/1 condition is equivalent to a guard conjunction."""
    dom = state.domains
    if all(_entailed(dom, lit) for lit in guard):
        if not flag_true():
            return False
    elif not all(_possible(dom, lit) for lit in guard):
        if not flag_false():
            return False
    if flag_is_true():
        return all(state.set(var, _bit(val)) for var, val in guard)
    if flag_is_false():
        if not all(_possible(dom, lit) for lit in guard):
            return True
        open_lits = [lit for lit in guard if not _entailed(dom, lit)]
        if not open_lits:
            return False
        if len(open_lits) == 1:
            var, val = open_lits[0]
            return state.restrict(var, ~_bit(val))
    return True


class _Propagator:
    def __init__(self, cid, constraint, ids):
        self.cid = cid
        self.constraint = constraint
        c = constraint
        lits = lambda pairs: tuple((ids[k], v) for k, v in pairs)
        if isinstance(c, IffMembership):
            self.bit, self.var, self.codes = ids[c.bit], ids[c.var], _mask(c.codes)
            self.scope = (self.bit, self.var)
        elif isinstance(c, ForceBit):
            self.guard, self.consequents = lits(c.guard), ((ids[c.bit], c.value),)
        elif isinstance(c, GuardedImplication):
            self.guard, self.consequents = lits(c.guard), lits(c.consequents)
        elif isinstance(c, ChannelImply):
            self.guard, self.consequents = ((ids[("channel", c.channel)], 1),), lits(c.consequents)
        elif isinstance(c, ChannelReify):
            self.flag, self.guard = ids[("channel", c.channel)], lits(c.guard)
            self.scope = (self.flag,) + tuple(v for v, _ in self.guard)
        elif isinstance(c, SentinelLink):
            self.var, self.guard = ids[c.var], lits(c.prerequisite)
            self.scope = (self.var,) + tuple(v for v, _ in self.guard)
        else:
            raise TypeError(f"unknown constraint {type(c).__name__}")
        if not hasattr(self, "scope"):
            self.scope = tuple(v for v, _ in self.guard + self.consequents)

    def run(self, state):
        c = self.constraint
        dom = state.domains
        if isinstance(c, IffMembership):
            dx = dom[self.var]
            if dx & ~self.codes == 0:
                if not state.set(self.bit, ONE & dom[self.bit]):
                    return False
            elif dx & self.codes == 0:
                if not state.set(self.bit, ZERO & dom[self.bit]):
                    return False
            db = dom[self.bit]
            if db == ONE:
                return state.restrict(self.var, self.codes)
            if db == ZERO:
                return state.restrict(self.var, ~self.codes)
            return True
        if isinstance(c, ChannelReify):
            f = self.flag
            return _equivalence(
                state,
                lambda: state.restrict(f, ONE), lambda: state.restrict(f, ZERO),
                lambda: dom[f] == ONE, lambda: dom[f] == ZERO, self.guard)
        if isinstance(c, SentinelLink):
            x = self.var
            active = ~_bit(SENTINEL)
            return _equivalence(
                state,
                lambda: state.restrict(x, active), lambda: state.restrict(x, _bit(SENTINEL)),
                lambda: not dom[x] & _bit(SENTINEL), lambda: dom[x] == _bit(SENTINEL), self.guard)
        return _implication(state, self.guard, self.consequents)


# ==================== SOLVER ====================
class Solver:
    """Single-threaded search over one ConfigCsp; owns its SearchState."""

    def __init__(self, csp, dynamic_order=False, state=None):
        self.csp = csp
        self.dynamic_order = dynamic_order
        self.keys = []
        self.ids = {}
        domains = []

        def add(key, mask):
            self.ids[key] = len(self.keys)
            self.keys.append(key)
            domains.append(mask)

        for var in csp.variables:
            add(var.path, _mask(var.domain))
        self.component_count = len(self.keys)
        for bit in csp.bit_variables():
            add(bit, BOOL_DOMAIN)
        for channel in csp.channels:
            add(("channel", channel), BOOL_DOMAIN)

        self.state = state if state is not None else SearchState(domains)
        self.propagators = [_Propagator(i, c, self.ids) for i, c in enumerate(csp.constraints)]
        self.watchers = [[] for _ in self.keys]
        for prop in self.propagators:
            for var in dict.fromkeys(prop.scope):
                self.watchers[var].append(prop.cid)

        order = [self.ids[p] for p in csp.search_order]
        listed = set(order)
        self.order = order + [i for i in range(len(self.keys)) if i not in listed]
        self.stats = SearchStats()
        self.root_domains = None

    def propagate(self, dirty=None):
        """Run propagators to fixpoint. Returns a Conflict or None."""
        if dirty is None:
            queue = deque(range(len(self.propagators)))
        else:
            queue = deque(dict.fromkeys(cid for v in dirty for cid in self.watchers[v]))
        queued = set(queue)
        state = self.state
        while queue:
            cid = queue.popleft()
            queued.discard(cid)
            before = len(state.trail)
            ok = self.propagators[cid].run(state)
            if not ok:
                return Conflict(cid, describe_constraint(self.csp.constraints[cid], self.csp.symbols))
            for var, _ in state.trail[before:]:
                for other in self.watchers[var]:
                    if other not in queued:
                        queued.add(other)
                        queue.append(other)
        return None

    def _select(self):
        dom = self.state.domains
        open_vars = [v for v in self.order if dom[v] & (dom[v] - 1)]
        if not open_vars:
            return None
        if self.dynamic_order:
            components = [v for v in open_vars if v < self.component_count]
            if components:
                return min(components, key=lambda v: bin(dom[v]).count("1"))
        return open_vars[0]

    def _values(self, var):
        if var < self.component_count:
            return self.csp.values_in_order(self.keys[var])
        return (0, 1)

    def assignment(self):
        comps, bits, channels = {}, {}, {}
        for i, key in enumerate(self.keys):
            value = _single_value(self.state.domains[i])
            if i < self.component_count:
                comps[key] = value
            elif isinstance(key, tuple):
                channels[key[1]] = value
            else:
                bits[key] = value
        return Assignment(comps, bits, channels)

    def _descend(self, stack):
        """Push a frame for the next open variable. Returns False when none is left."""
        var = self._select()
        if var is None:
            return False
        stack.append([var, iter(self._values(var)), False])
        return True

    def _search(self):
        # frames are [var, remaining values, level pushed]
        stack = []
        if not self._descend(stack):
            self.stats.solutions += 1
            yield self.assignment()
            return
        state = self.state
        while stack:
            frame = stack[-1]
            var, values, pushed = frame
            if pushed:
                state.pop_level()
                frame[2] = False
            value = next((v for v in values if state.domains[var] & _bit(v)), None)
            if value is None:
                stack.pop()
                continue
            self.stats.nodes += 1
            state.push_level()
            frame[2] = True
            if not (state.set(var, _bit(value)) and self.propagate([var]) is None):
                self.stats.failures += 1
                continue
            if not self._descend(stack):
                self.stats.solutions += 1
                yield self.assignment()

    def assignments(self):
        """Yield every solution in search order."""
        conflict = self.propagate()
        if conflict is not None:
            logger.info("Root propagation failed: %s", conflict)
            self.root_conflict = conflict
            return
        self.root_conflict = None
        self.root_domains = list(self.state.domains)
        yield from self._search()
        logger.info("Search finished: %d nodes, %d failures, %d solutions",
                    self.stats.nodes, self.stats.failures, self.stats.solutions)


# ==================== OPERATIONS ====================
def initial_state(csp):
    return Solver(csp).state


def propagate(csp, state):
    """Propagate a state of csp to fixpoint; returns the state or a Conflict."""
    solver = Solver(csp, state=state)
    conflict = solver.propagate()
    return conflict if conflict is not None else solver.state


def project(csp, assignment):
    """Keep active component choices, drop sentinel and bit variables."""
    symbols = csp.symbols
    return Configuration.from_mapping({
        path: symbols.implementation(code)
        for path, code in assignment.components.items()
        if code != SENTINEL
    })


def first_assignment(csp, dynamic_order=False):
    return next(Solver(csp, dynamic_order).assignments(), None)


def solve_first(csp, dynamic_order=False):
    """First configuration under the model's search order, or Unsat."""
    solver = Solver(csp, dynamic_order)
    found = next(solver.assignments(), None)
    if found is None:
        reason = str(solver.root_conflict) if solver.root_conflict else "search space exhausted"
        return Unsat(reason)
    return project(csp, found)


def solve_all(csp, limit=None, dynamic_order=False):
    """All configurations in search order, truncated at limit."""
    if limit is not None and limit < 1:
        raise ValueError("limit must be >= 1")
    out = []
    for found in Solver(csp, dynamic_order).assignments():
        out.append(project(csp, found))
        if limit is not None and len(out) >= limit:
            break
    return out


def _value_of(assignment, key):
    if isinstance(key, str):
        return assignment.components[key]
    return assignment.bits[key]


def _holds(assignment, literals):
    return all(_value_of(assignment, k) == v for k, v in literals)


def _satisfied(c, a):
    if isinstance(c, IffMembership):
        return (a.bits[c.bit] == 1) == (a.components[c.var] in c.codes)
    if isinstance(c, ForceBit):
        return not _holds(a, c.guard) or a.bits[c.bit] == c.value
    if isinstance(c, GuardedImplication):
        return not _holds(a, c.guard) or _holds(a, c.consequents)
    if isinstance(c, ChannelReify):
        return (a.channels[c.channel] == 1) == _holds(a, c.guard)
    if isinstance(c, ChannelImply):
        return a.channels[c.channel] != 1 or _holds(a, c.consequents)
    return (a.components[c.var] == SENTINEL) == (not _holds(a, c.prerequisite))


def _missing(csp, assignment):
    missing = [v.path for v in csp.variables if v.path not in assignment.components]
    missing += [b for b in csp.bit_variables() if b not in assignment.bits]
    missing += [ch for ch in csp.channels if ch not in assignment.channels]
    return missing


def assignment_violations(csp, assignment):
    """Every domain or constraint violation of a total assignment, as messages."""
    missing = _missing(csp, assignment)
    if missing:
        raise MalformedAssignment(missing)
    violations = []
    for var in csp.variables:
        value = assignment.components[var.path]
        if value not in var.domain:
            violations.append(f"{var.path}: value {value} outside domain {list(var.domain)}")
    for key, value in list(assignment.bits.items()) + list(assignment.channels.items()):
        if value not in (0, 1):
            violations.append(f"{key}: value {value} is not 0/1")
    for c in csp.constraints:
        if not _satisfied(c, assignment):
            violations.append(f"violated: {describe_constraint(c, csp.symbols)}")
    return violations


def check_assignment(csp, assignment):
    """True iff the total assignment satisfies every constraint (no propagation involved)."""
    return not assignment_violations(csp, assignment)
