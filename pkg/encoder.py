"""Compile a validated (library, problem) pair into a finite-domain model.

Every requirement becomes an integer component variable whose value is the
code of the implementing template. Each component variable carries two
Boolean arrays (properties, provides) tied to the chosen code by
if-and-only-if membership constraints. Requirements of an implementation
become conditional variables named after the choices that make them
relevant (``<parent>=<Impl>/<local>``); they take the sentinel 0 exactly
when that chain of choices does not hold.
"""
from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import dataclass, field, replace
from functools import cached_property

from adl import Accepts, Scope, SetLiteral, SetRef, SubsetOf, format_check
from errors import DepthExceeded, InvalidEncoding, InvalidOrderFile, InvalidPreference, UnknownVariable

logger = logging.getLogger(__name__)

SENTINEL = 0
DEFAULT_DEPTH_LIMIT = 4


# ==================== SYMBOLS ====================
@dataclass(frozen=True)
class SymbolTable:
    """Implementation codes start at 1 (0 = inactive); property/facility indices are dense from 0."""
    implementations: tuple = ()
    properties: tuple = ()
    facilities: tuple = ()

    @cached_property
    def _codes(self):
        return {name: i + 1 for i, name in enumerate(self.implementations)}

    @cached_property
    def _property_index(self):
        return {name: i for i, name in enumerate(self.properties)}

    @cached_property
    def _facility_index(self):
        return {name: i for i, name in enumerate(self.facilities)}

    def code(self, implementation):
        return self._codes[implementation]

    def implementation(self, code):
        if code == SENTINEL:
            return None
        return self.implementations[code - 1]

    def property_index(self, name):
        return self._property_index[name]

    def facility_index(self, name):
        return self._facility_index[name]

    def names(self, kind):
        return self.properties if kind == "prop" else self.facilities


def _literal_names(checks, attribute):
    out = []
    for chk in checks:
        if isinstance(chk, SubsetOf):
            sides = (chk.lhs, chk.rhs)
            refs = [s for s in sides if isinstance(s, SetRef)]
            lits = [s for s in sides if isinstance(s, SetLiteral)]
            if len(refs) == 1 and len(lits) == 1 and refs[0].attribute == attribute:
                out.extend(lits[0].names)
        elif attribute == "properties":
            out.extend(chk.extra_properties)
    return out


def build_symbols(library, problem=None):
    """Map implementations, properties and facilities to integers in declaration order.

    Property and facility names that only occur in check literals are
    included too; no implementation has them, so their bits stay 0.
    """
    all_checks = [c for t in library.templates for c in t.checks]
    if problem is not None:
        all_checks += list(problem.checks)

    properties = [p for t in library.templates for p in t.properties]
    properties += _literal_names(all_checks, "properties")

    facilities = [f for t in library.templates for f in t.provides]
    facilities += [r.facility for t in library.templates for r in t.requires]
    if problem is not None:
        facilities += [r.facility for r in problem.requires]
    facilities += _literal_names(all_checks, "provides")

    return SymbolTable(
        implementations=tuple(t.name for t in library.templates),
        properties=tuple(dict.fromkeys(properties)),
        facilities=tuple(dict.fromkeys(facilities)),
    )


# ==================== MODEL TYPES ====================
@dataclass(frozen=True, order=True)
class BitRef:
    """One element of a component variable's property ("prop") or provides ("prov") array."""
    path: str
    kind: str
    index: int

    def __str__(self):
        return f"{self.path}.{self.kind}[{self.index}]"


@dataclass(frozen=True)
class ComponentVar:
    path: str
    facility: str
    domain: tuple
    prerequisite: tuple = ()
    prop_bits: tuple = ()
    prov_bits: tuple = ()
    depth: int = 1

    @property
    def conditional(self):
        return bool(self.prerequisite)

    def bits(self, kind):
        return self.prop_bits if kind == "prop" else self.prov_bits


def format_guard(guard, symbols=None):
    if not guard:
        return "true"
    parts = []
    for path, code in guard:
        shown = symbols.implementation(code) if symbols is not None else code
        parts.append(f"{path}={shown}")
    return " & ".join(parts)


@dataclass(frozen=True)
class IffMembership:
    """bit = 1 <=> var takes one of codes"""
    bit: BitRef
    var: str
    codes: tuple
    origin: str = field(default="", compare=False)


@dataclass(frozen=True)
class ForceBit:
    """guard => bit = value (unconditional when guard is empty)"""
    bit: BitRef
    value: int
    guard: tuple = ()
    origin: str = field(default="", compare=False)


@dataclass(frozen=True)
class GuardedImplication:
    guard: tuple
    consequents: tuple
    origin: str = field(default="", compare=False)


@dataclass(frozen=True)
class ChannelReify:
    """channel = 1 <=> every guard literal holds"""
    channel: str
    guard: tuple
    origin: str = field(default="", compare=False)


@dataclass(frozen=True)
class ChannelImply:
    """channel = 1 => every consequent holds"""
    channel: str
    consequents: tuple
    origin: str = field(default="", compare=False)


@dataclass(frozen=True)
class SentinelLink:
    """var = 0 <=> prerequisite fails"""
    var: str
    prerequisite: tuple
    origin: str = field(default="", compare=False)


def describe_constraint(constraint, symbols=None):
    """Human-readable form naming the constraint and its guard chain."""
    if isinstance(constraint, IffMembership):
        codes = ",".join(str(c) for c in constraint.codes)
        text = f"{constraint.bit} <=> {constraint.var} in {{{codes}}}"
    elif isinstance(constraint, ForceBit):
        text = f"{format_guard(constraint.guard, symbols)} => {constraint.bit}={constraint.value}"
    elif isinstance(constraint, (GuardedImplication, ChannelImply)):
        head = (format_guard(constraint.guard, symbols) if isinstance(constraint, GuardedImplication)
                else constraint.channel)
        body = " & ".join(f"{b}={v}" for b, v in constraint.consequents)
        text = f"{head} => {body}"
    elif isinstance(constraint, ChannelReify):
        text = f"{constraint.channel} <=> {format_guard(constraint.guard, symbols)}"
    else:
        text = f"{constraint.var}=0 <=> not ({format_guard(constraint.prerequisite, symbols)})"
    kind = type(constraint).__name__
    if constraint.origin:
        return f"{kind} [{constraint.origin}] {text}"
    return f"{kind} {text}"


@dataclass(frozen=True)
class ConfigCsp:
    symbols: SymbolTable
    variables: tuple
    channels: tuple
    constraints: tuple
    search_order: tuple
    value_order: dict = field(compare=False)

    @cached_property
    def _by_path(self):
        return {v.path: v for v in self.variables}

    def variable(self, path):
        try:
            return self._by_path[path]
        except KeyError:
            raise UnknownVariable(path) from None

    def bit_variables(self):
        return [b for v in self.variables for b in v.prop_bits + v.prov_bits]

    def values_in_order(self, path):
        return self.value_order.get(path, self.variable(path).domain)


# ==================== OPERATIONS ====================
def candidate_implementations(library, facility):
    """Templates providing the facility, in declaration order."""
    return [t for t in library.templates if facility in t.provides]


def _make_var(symbols, path, facility, domain, prerequisite, depth):
    return ComponentVar(
        path=path,
        facility=facility,
        domain=tuple(domain),
        prerequisite=tuple(prerequisite),
        prop_bits=tuple(BitRef(path, "prop", i) for i in range(len(symbols.properties))),
        prov_bits=tuple(BitRef(path, "prov", i) for i in range(len(symbols.facilities))),
        depth=depth,
    )


def expand(library, problem, depth_limit=DEFAULT_DEPTH_LIMIT, symbols=None):
    """Create top-level and conditional component variables, breadth first."""
    if depth_limit < 1:
        raise ValueError("depth_limit must be >= 1")
    symbols = symbols or build_symbols(library, problem)

    def domain_for(facility, conditional):
        codes = [symbols.code(t.name) for t in candidate_implementations(library, facility)]
        return ([SENTINEL] if conditional else []) + codes

    queue = deque(
        _make_var(symbols, r.name, r.facility, domain_for(r.facility, False), (), 1)
        for r in problem.requires
    )
    out = []
    while queue:
        var = queue.popleft()
        out.append(var)
        for tmpl in candidate_implementations(library, var.facility):
            if not tmpl.requires:
                continue
            if var.depth >= depth_limit:
                raise DepthExceeded(f"{var.path}={tmpl.name}", depth_limit)
            prerequisite = var.prerequisite + ((var.path, symbols.code(tmpl.name)),)
            for sub in tmpl.requires:
                queue.append(_make_var(
                    symbols, f"{var.path}={tmpl.name}/{sub.name}", sub.facility,
                    domain_for(sub.facility, True), prerequisite, var.depth + 1,
                ))
    logger.debug("Expanded %d component variables (%d conditional)",
                 len(out), sum(1 for v in out if v.conditional))
    return out


@dataclass
class SlotDemand:
    """What a template demands of whatever is passed for one of its parameters."""
    required: dict
    forbidden: dict


def slot_demand(template, param, symbols):
    required = {"prop": set(), "prov": set()}
    allowed = {"prop": None, "prov": None}
    for chk in template.checks:
        if not isinstance(chk, SubsetOf):
            continue
        for ref, lit, literal_left in ((chk.rhs, chk.lhs, True), (chk.lhs, chk.rhs, False)):
            if not (isinstance(ref, SetRef) and isinstance(lit, SetLiteral) and ref.entity == (param,)):
                continue
            kind = "prop" if ref.attribute == "properties" else "prov"
            if literal_left:
                required[kind].update(lit.names)
            else:
                names = set(lit.names)
                allowed[kind] = names if allowed[kind] is None else allowed[kind] & names
    forbidden = {
        kind: set() if allowed[kind] is None else set(symbols.names(kind)) - allowed[kind]
        for kind in ("prop", "prov")
    }
    return SlotDemand(required, forbidden)


def _consequents(candidate_var, demand, extra_properties, symbols):
    out = []
    for kind in ("prop", "prov"):
        granted = set(extra_properties) if kind == "prop" else set()
        bits = candidate_var.bits(kind)
        for i, name in enumerate(symbols.names(kind)):
            if name in demand.required[kind] and name not in granted:
                out.append((bits[i], 1))
            if name in demand.forbidden[kind]:
                out.append((bits[i], 0))
    return tuple(out)


class _Encoder:
    def __init__(self, library, problem, symbols, variables):
        self.library = library
        self.problem = problem
        self.symbols = symbols
        self.by_path = {v.path: v for v in variables}
        self.variables = variables
        self.constraints = []

    def membership(self):
        for var in self.variables:
            cands = candidate_implementations(self.library, var.facility)
            for kind, attr in (("prop", "properties"), ("prov", "provides")):
                for i, name in enumerate(self.symbols.names(kind)):
                    codes = tuple(self.symbols.code(t.name) for t in cands if name in getattr(t, attr))
                    bit = var.bits(kind)[i]
                    if codes:
                        self.constraints.append(IffMembership(bit, var.path, codes, var.path))
                    else:
                        # no candidate has it: always out of the set
                        self.constraints.append(ForceBit(bit, 0, (), var.path))
            if var.conditional:
                self.constraints.append(SentinelLink(var.path, var.prerequisite, var.path))

    def checks(self, checks, scope, paths, guard, owner, template=None):
        for chk in checks:
            origin = f"{owner}: {format_check(chk)}"
            if isinstance(chk, SubsetOf):
                self.subset(chk, scope, paths, guard, origin)
            else:
                self.accepts(chk, scope, paths, guard, origin, template)

    def subset(self, chk, scope, paths, guard, origin):
        literal_left = isinstance(chk.lhs, SetLiteral)
        literal, ref = (chk.lhs, chk.rhs) if literal_left else (chk.rhs, chk.lhs)
        resolved = scope.resolve(ref.entity)
        if resolved is None or resolved.kind != "requirement":
            # demands on own parameters are applied through 'accepts'
            return
        var = self.by_path[paths[resolved.requirement]]
        kind = "prop" if ref.attribute == "properties" else "prov"
        names = self.symbols.names(kind)
        bits = var.bits(kind)
        if literal_left:
            for name in dict.fromkeys(literal.names):
                self.constraints.append(ForceBit(bits[names.index(name)], 1, guard, origin))
        else:
            for i, name in enumerate(names):
                if name not in literal.names:
                    self.constraints.append(ForceBit(bits[i], 0, guard, origin))

    def accepts(self, chk, scope, paths, guard, origin, template):
        slot = scope.resolve(chk.slot)
        candidate_var = self.by_path[paths[scope.resolve(chk.candidate).requirement]]
        if slot.kind == "param":
            demand = slot_demand(template, slot.param, self.symbols)
            cons = _consequents(candidate_var, demand, chk.extra_properties, self.symbols)
            if cons:
                self.constraints.append(GuardedImplication(guard, cons, origin))
            return
        owner_var = self.by_path[paths[slot.requirement]]
        for impl in candidate_implementations(self.library, owner_var.facility):
            if slot.param not in impl.params:
                continue
            demand = slot_demand(impl, slot.param, self.symbols)
            cons = _consequents(candidate_var, demand, chk.extra_properties, self.symbols)
            if cons:
                impl_guard = guard + ((owner_var.path, self.symbols.code(impl.name)),)
                self.constraints.append(GuardedImplication(impl_guard, cons, origin))

    def all_checks(self):
        problem_paths = {r.name: r.name for r in self.problem.requires}
        self.checks(self.problem.checks, Scope.for_problem(self.problem), problem_paths, (),
                    f"problem '{self.problem.name}'")
        for var in self.variables:
            for impl in candidate_implementations(self.library, var.facility):
                if not impl.checks:
                    continue
                guard = var.prerequisite + ((var.path, self.symbols.code(impl.name)),)
                paths = {r.name: f"{var.path}={impl.name}/{r.name}" for r in impl.requires}
                self.checks(impl.checks, Scope.for_template(impl), paths, guard,
                            f"{var.path}={impl.name}", impl)

    def channels(self):
        """One channelling variable per (guard, component variable, bit array)."""
        groups = {}
        origins = {}
        for c in self.constraints:
            if isinstance(c, ForceBit) and c.guard:
                guard, items = c.guard, ((c.bit, c.value),)
            elif isinstance(c, GuardedImplication) and c.guard:
                guard, items = c.guard, c.consequents
            else:
                continue
            for bit, value in items:
                key = (guard, bit.path, bit.kind)
                groups.setdefault(key, {})[(bit, value)] = None
                origins.setdefault(key, c.origin)
        names = []
        for n, (key, items) in enumerate(groups.items()):
            name = f"ch{n}"
            names.append(name)
            self.constraints.append(ChannelReify(name, key[0], origins[key]))
            self.constraints.append(ChannelImply(name, tuple(items), origins[key]))
        return tuple(names)


def encode(library, problem, depth_limit=DEFAULT_DEPTH_LIMIT):
    """Build the ConfigCsp for a validated library and problem."""
    symbols = build_symbols(library, problem)
    variables = expand(library, problem, depth_limit, symbols)
    enc = _Encoder(library, problem, symbols, variables)
    enc.membership()
    enc.all_checks()
    channels = enc.channels()
    csp = ConfigCsp(
        symbols=symbols,
        variables=tuple(variables),
        channels=channels,
        constraints=tuple(enc.constraints),
        search_order=tuple(v.path for v in variables),
        value_order={v.path: v.domain for v in variables},
    )
    logger.info("Encoded %d component variables, %d channels, %d constraints",
                len(csp.variables), len(csp.channels), len(csp.constraints))
    return csp


def set_search_order(csp, var_order=(), value_prefs=None):
    """Return a copy of csp with the given variable order and value preferences.

    Unmentioned variables keep declaration order after the listed ones;
    unmentioned values follow the preferred ones in code order.
    """
    value_prefs = value_prefs or {}
    for path in list(var_order) + list(value_prefs):
        csp.variable(path)

    listed = list(dict.fromkeys(var_order))
    order = listed + [v.path for v in csp.variables if v.path not in listed]

    values = {}
    for var in csp.variables:
        prefs = tuple(dict.fromkeys(value_prefs.get(var.path, ())))
        for code in prefs:
            if code not in var.domain:
                raise InvalidPreference(var.path, code)
        values[var.path] = prefs + tuple(c for c in var.domain if c not in prefs)
    return replace(csp, search_order=tuple(order), value_order=values)


def _string_list(value):
    return isinstance(value, list) and all(isinstance(item, str) for item in value)


def load_order_file(path, csp):
    """Apply an order file {"vars": [path...], "values": {path: [implName...]}}."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except UnicodeDecodeError as exc:
        raise InvalidEncoding(str(path), exc.start) from None
    if not isinstance(data, dict):
        raise InvalidOrderFile(str(path), f"top level must be an object, not {type(data).__name__}")
    var_order = data.get("vars") or []
    if not _string_list(var_order):
        raise InvalidOrderFile(str(path), "'vars' must be a list of variable paths")
    values = data.get("values") or {}
    if not isinstance(values, dict):
        raise InvalidOrderFile(str(path), "'values' must map variable paths to lists")

    value_prefs = {}
    for var_path, names in values.items():
        if not _string_list(names):
            raise InvalidOrderFile(str(path), f"preference for '{var_path}' must be a list of implementation names")
        codes = []
        for name in names:
            if name not in csp.symbols.implementations:
                raise InvalidPreference(var_path, name)
            codes.append(csp.symbols.code(name))
        value_prefs[var_path] = codes
    return set_search_order(csp, var_order, value_prefs)
