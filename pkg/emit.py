"""Serializers: Minion 3 model text, JSON configuration reports, DSL pretty-printing."""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass

from adl import ComponentLibrary, Configuration, ProblemSpec, format_check
from encoder import (
    ChannelImply,
    ChannelReify,
    ForceBit,
    GuardedImplication,
    IffMembership,
    SENTINEL,
    SentinelLink,
)
from errors import EmptyModel

logger = logging.getLogger(__name__)

INDENT = "    "


# ==================== MINION NAMES ====================
@dataclass(frozen=True)
class MinionNames:
    """Minion identifiers for every model variable, in PRINT order."""
    components: dict
    bits: dict
    channels: dict
    activations: dict

    def ref(self, key):
        if isinstance(key, str):
            return self.components[key]
        return self.bits[key]

    def printed(self):
        """(minion name, model key) pairs in the order PRINT lists them."""
        out = [(name, path) for path, name in self.components.items()]
        out += [(name, bit) for bit, name in self.bits.items()]
        out += [(name, ("channel", ch)) for ch, name in self.channels.items()]
        out += [(name, ("activation", path)) for path, name in self.activations.items()]
        return out


def minion_names(csp):
    components, bits = {}, {}
    for i, var in enumerate(csp.variables):
        components[var.path] = f"c{i}"
        for bit in var.prop_bits:
            bits[bit] = f"c{i}_prop[{bit.index}]"
        for bit in var.prov_bits:
            bits[bit] = f"c{i}_prov[{bit.index}]"
    channels = {ch: ch for ch in csp.channels}
    links = [c for c in csp.constraints if isinstance(c, SentinelLink)]
    activations = {c.var: f"act{k}" for k, c in enumerate(links)}
    return MinionNames(components, bits, channels, activations)


# ==================== MINION MODEL ====================
def _eqs(names, literals):
    return ",".join(f"eq({names.ref(k)},{v})" for k, v in literals)


def _value_order_tag(order, domain):
    if list(order) == sorted(domain):
        return "a"
    if list(order) == sorted(domain, reverse=True):
        return "d"
    return None


def _variables_section(csp, names):
    lines = ["**VARIABLES**"]
    n_props, n_provs = len(csp.symbols.properties), len(csp.symbols.facilities)
    for var in csp.variables:
        base = names.components[var.path]
        lines.append(f"# {base} = {var.path} ({var.facility})")
        lines.append(f"DISCRETE {base} {{{min(var.domain)}..{max(var.domain)}}}")
        # a library without properties (or facilities) still gets a length-1 array, pinned to 0
        lines.append(f"DISCRETE {base}_prop[{max(n_props, 1)}] {{0..1}}")
        lines.append(f"DISCRETE {base}_prov[{max(n_provs, 1)}] {{0..1}}")
    for name in list(names.channels.values()) + list(names.activations.values()):
        lines.append(f"DISCRETE {name} {{0..1}}")
    return lines


def _search_section(csp, names):
    lines = ["**SEARCH**"]
    order = [names.components[p] for p in csp.search_order]
    lines.append(f"VARORDER [{','.join(order)}]")
    tags = []
    for path in csp.search_order:
        var = csp.variable(path)
        values = csp.values_in_order(path)
        tag = _value_order_tag(values, var.domain)
        if tag is None:
            tag = "a"
            lines.append(f"#VALPREF {names.components[path]} {','.join(str(v) for v in values)}")
        tags.append(tag)
    lines.append(f"VALORDER [{','.join(tags)}]")
    aux = list(names.bits.values()) + list(names.channels.values()) + list(names.activations.values())
    if aux:
        lines.append(f"VARORDER AUX [{','.join(aux)}]")
    printed = [name for name, _ in names.printed()]
    lines.append(f"PRINT [[{','.join(printed)}]]")
    return lines


def _constraints_section(csp, names):
    lines = ["**CONSTRAINTS**"]
    for kind, names_of_kind in (("prop", csp.symbols.properties), ("prov", csp.symbols.facilities)):
        if not names_of_kind:
            lines += [f"eq({names.components[v.path]}_{kind}[0],0)" for v in csp.variables]
    for var in csp.variables:
        codes = sorted(var.domain)
        if codes != list(range(codes[0], codes[-1] + 1)):
            lines.append(f"w-inset({names.components[var.path]},[{','.join(str(c) for c in codes)}])")
    for c in csp.constraints:
        if isinstance(c, IffMembership):
            lines.append(f"reify(watched-or({{{_eqs(names, [(c.var, code) for code in c.codes])}}}),"
                         f"{names.ref(c.bit)})")
        elif isinstance(c, ForceBit):
            if not c.guard:
                lines.append(f"eq({names.ref(c.bit)},{c.value})")
        elif isinstance(c, GuardedImplication):
            if not c.guard:
                lines.extend(f"eq({names.ref(b)},{v})" for b, v in c.consequents)
        elif isinstance(c, ChannelReify):
            lines.append(f"reify(watched-and({{{_eqs(names, c.guard)}}}),{names.channels[c.channel]})")
        elif isinstance(c, ChannelImply):
            lines.append(f"reifyimply(watched-and({{{_eqs(names, c.consequents)}}}),"
                         f"{names.channels[c.channel]})")
        elif isinstance(c, SentinelLink):
            act = names.activations[c.var]
            active = [str(v) for v in csp.variable(c.var).domain if v != SENTINEL]
            lines.append(f"reify(watched-and({{{_eqs(names, c.prerequisite)}}}),{act})")
            lines.append(f"reify(w-inset({names.components[c.var]},[{','.join(active)}]),{act})")
    return lines


def emit_minion(csp):
    """Minion 3 input text for csp."""
    if not csp.variables:
        raise EmptyModel()
    names = minion_names(csp)
    lines = ["MINION 3", f"# properties: {','.join(csp.symbols.properties)}",
             f"# facilities: {','.join(csp.symbols.facilities)}",
             f"# implementations: {','.join(csp.symbols.implementations)}"]
    lines += _variables_section(csp, names)
    lines += _search_section(csp, names)
    lines += _constraints_section(csp, names)
    lines.append("**EOF**")
    logger.debug("Emitted Minion model with %d lines", len(lines))
    return "\n".join(lines) + "\n"


# ==================== MINION GRAMMAR CHECK ====================
SECTIONS = ("**VARIABLES**", "**SEARCH**", "**CONSTRAINTS**", "**EOF**")
CONSTRAINT_NAMES = {"eq", "w-inset", "watched-or", "watched-and", "reify", "reifyimply"}
_TOKEN_RE = re.compile(r"\s*(?:(-?\d+)|([A-Za-z_][A-Za-z0-9_\-]*)|([(){}\[\],]))")
_DECL_RE = re.compile(r"^DISCRETE ([A-Za-z_][A-Za-z0-9_]*)(?:\[(\d+)\])? \{(-?\d+)\.\.(-?\d+)\}$")


class _TermError(Exception):
    pass


def _lex(text):
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise _TermError(f"unexpected character {text[pos]!r}")
        pos = m.end()
        if m.group(1):
            tokens.append(("int", int(m.group(1))))
        elif m.group(2):
            tokens.append(("name", m.group(2)))
        else:
            tokens.append((m.group(3), m.group(3)))
    return tokens


class _TermParser:
    """constraint := NAME "(" arg ("," arg)* ")"; arg := constraint | ref | INT | "{" constraints "}" | "[" atoms "]"."""

    def __init__(self, tokens, declared):
        self.tokens = tokens
        self.pos = 0
        self.declared = declared

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self, kind):
        tok = self.peek()
        if tok[0] != kind:
            raise _TermError(f"expected {kind!r}, found {tok[1]!r}")
        self.pos += 1
        return tok[1]

    def ref(self):
        name = self.take("name")
        if self.peek()[0] == "[":
            self.take("[")
            index = self.take("int")
            self.take("]")
            size = self.declared.get(name)
            if size is None or size == 0 or not 0 <= index < size:
                raise _TermError(f"undeclared variable {name}[{index}]")
        elif self.declared.get(name, -1) != 0:
            raise _TermError(f"undeclared variable {name}")
        return ("var", name)

    def atom(self):
        if self.peek()[0] == "int":
            return ("int", self.take("int"))
        return self.ref()

    def atoms(self, close):
        items = [self.atom()]
        while self.peek()[0] == ",":
            self.take(",")
            items.append(self.atom())
        self.take(close)
        return items

    def constraint(self):
        name = self.take("name")
        if name not in CONSTRAINT_NAMES:
            raise _TermError(f"unknown constraint '{name}'")
        self.take("(")
        if name in ("watched-or", "watched-and"):
            self.take("{")
            inner = [self.constraint()]
            while self.peek()[0] == ",":
                self.take(",")
                inner.append(self.constraint())
            self.take("}")
        elif name in ("reify", "reifyimply"):
            self.constraint()
            self.take(",")
            self.ref()
        elif name == "w-inset":
            self.ref()
            self.take(",")
            self.take("[")
            values = self.atoms("]")
            if any(kind != "int" for kind, _ in values):
                raise _TermError("w-inset expects an integer list")
        else:
            self.atom()
            self.take(",")
            self.atom()
        self.take(")")
        return name

    def parse(self):
        self.constraint()
        if self.pos != len(self.tokens):
            raise _TermError(f"trailing input {self.peek()[1]!r}")


def _list_refs(body, declared):
    parser = _TermParser(_lex(body), declared)
    parser.take("[")
    nested = parser.peek()[0] == "["
    if nested:
        parser.take("[")
    parser.atoms("]")
    if nested:
        parser.take("]")
    if parser.pos != len(parser.tokens):
        raise _TermError("trailing input in list")


def check_minion_syntax(text):
    """Problems found in a Minion 3 file (subset emitted here); empty means well-formed."""
    errors = []
    lines = text.split("\n")
    if not lines or lines[0] != "MINION 3":
        errors.append("line 1: expected 'MINION 3'")
    declared = {}
    section = None
    seen = []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line in SECTIONS:
            expected = SECTIONS[len(seen)] if len(seen) < len(SECTIONS) else None
            if line != expected:
                errors.append(f"line {lineno}: section {line} out of order")
            seen.append(line)
            section = line
            continue
        try:
            if section == "**VARIABLES**":
                m = _DECL_RE.match(line)
                if not m:
                    raise _TermError(f"bad declaration {line!r}")
                if m.group(1) in declared:
                    raise _TermError(f"duplicate declaration {m.group(1)}")
                if int(m.group(3)) > int(m.group(4)):
                    raise _TermError(f"empty bounds for {m.group(1)}")
                declared[m.group(1)] = int(m.group(2)) if m.group(2) else 0
            elif section == "**SEARCH**":
                for head in ("VARORDER AUX ", "VARORDER ", "PRINT "):
                    if line.startswith(head):
                        _list_refs(line[len(head):], declared)
                        break
                else:
                    if not re.fullmatch(r"VALORDER \[[ad](,[ad])*\]", line):
                        raise _TermError(f"bad search line {line!r}")
            elif section == "**CONSTRAINTS**":
                _TermParser(_lex(line), declared).parse()
            else:
                raise _TermError("content outside any section")
        except _TermError as exc:
            errors.append(f"line {lineno}: {exc}")
    if tuple(seen) != SECTIONS:
        errors.append(f"expected sections {', '.join(SECTIONS)}; found {', '.join(seen) or 'none'}")
    return errors


# ==================== REPORT ====================
def emit_report(configurations):
    """JSON document: one array of {path, implementation} per configuration, then {count}."""
    doc = [
        [{"path": path, "implementation": impl} for path, impl in sorted(cfg.choices)]
        for cfg in configurations
    ]
    doc.append({"count": len(configurations)})
    return json.dumps(doc, indent=2) + "\n"


def parse_report(text):
    doc = json.loads(text)
    if not doc or not isinstance(doc[-1], dict) or "count" not in doc[-1]:
        raise ValueError("report does not end with a count summary")
    configs = [
        Configuration.from_mapping({item["path"]: item["implementation"] for item in entry})
        for entry in doc[:-1]
    ]
    if len(configs) != doc[-1]["count"]:
        raise ValueError(f"report count {doc[-1]['count']} does not match {len(configs)} entries")
    return configs


# ==================== DSL ====================
def _template_text(tmpl):
    lines = [f"template {tmpl.name}({', '.join(tmpl.params)}) {{"]
    lines.append(f"{INDENT}provides {', '.join(tmpl.provides)};")
    if tmpl.properties:
        lines.append(f"{INDENT}properties {', '.join(tmpl.properties)};")
    lines += [f"{INDENT}requires {r.facility} {r.name};" for r in tmpl.requires]
    lines += [f"{INDENT}check {format_check(c)};" for c in tmpl.checks]
    lines.append("}")
    return "\n".join(lines) + "\n"


def _problem_text(problem):
    lines = [f"problem {problem.name} {{"]
    lines += [f"{INDENT}requires {r.facility} {r.name};" for r in problem.requires]
    lines += [f"{INDENT}check {format_check(c)};" for c in problem.checks]
    lines.append("}")
    return "\n".join(lines) + "\n"


def pretty_print(node):
    """Canonical DSL text for a ComponentLibrary or a ProblemSpec."""
    if isinstance(node, ComponentLibrary):
        return "\n".join(_template_text(t) for t in node.templates)
    if isinstance(node, ProblemSpec):
        return _problem_text(node)
    raise TypeError(f"cannot pretty-print {type(node).__name__}")
