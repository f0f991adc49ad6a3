"""Component-library description language: tokens, AST, parser, validation.

The language is a small subset of an architecture description language:
templates with parameters, provides/properties sets, sub-requirements and
two kinds of checks (``subsetof`` and ``accepts``), plus one top-level
``problem`` block naming what the target solver needs.

Grammar (normative):

    library   := template* ;
    template  := "template" IDENT "(" [IDENT ("," IDENT)*] ")" "{" tbody "}" ;
    tbody     := ("provides" identlist ";")
                 ["properties" identlist ";"]
                 ("requires" IDENT IDENT ";")*
                 ("check" check ";")* ;
    problem   := "problem" IDENT "{" ("requires" IDENT IDENT ";")* ("check" check ";")* "}" ;
    check     := setexpr "subsetof" setexpr
               | entref "accepts" entref ["with" "{" identlist "}"] ;
    setexpr   := "{" [identlist] "}" | entref "." ("properties" | "provides") ;
    entref    := IDENT ("." IDENT)* ;
    identlist := IDENT ("," IDENT)* ;
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Optional, Union

logger = logging.getLogger(__name__)

# ==================== TOKENS ====================
KEYWORDS = {
    "template", "provides", "properties", "requires", "check",
    "problem", "subsetof", "accepts", "with",
}
PUNCTUATION = {
    "(": "lparen", ")": "rparen", "{": "lbrace", "}": "rbrace",
    ";": "semi", ",": "comma", ".": "dot",
}
PUNCT_TEXT = {kind: ch for ch, kind in PUNCTUATION.items()}
IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
SET_ATTRIBUTES = ("properties", "provides")

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Span:
    file: str
    line: int
    column: int

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}"


NO_SPAN = Span("<none>", 1, 1)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: Span = field(default=NO_SPAN, compare=False)

    def __str__(self):
        if self.kind in ("kw", "ident"):
            return f"{self.kind}:{self.text}"
        return self.kind


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    span: Span

    def __str__(self):
        return f"{self.span}: {self.severity}: {self.message}"


def has_errors(diagnostics):
    return any(d.severity == ERROR for d in diagnostics)


def tokenize(text, filename="<input>"):
    """Split DSL text into tokens. Returns (tokens, diagnostics).

    Whitespace and ``//`` comments are dropped; an illegal character is
    reported and skipped so that lexing continues.
    """
    tokens = []
    diagnostics = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r\f\v":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            end = text.find("\n", i)
            end = n if end == -1 else end
            col += end - i
            i = end
            continue
        span = Span(filename, line, col)
        if ch in PUNCTUATION:
            tokens.append(Token(PUNCTUATION[ch], ch, span))
            i += 1
            col += 1
            continue
        m = IDENT_RE.match(text, i)
        if m:
            word = m.group(0)
            tokens.append(Token("kw" if word in KEYWORDS else "ident", word, span))
            i = m.end()
            col += len(word)
            continue
        diagnostics.append(Diagnostic(ERROR, f"illegal character {ch!r} at {line}:{col}", span))
        i += 1
        col += 1
    return tokens, diagnostics


# ==================== AST ====================
@dataclass(frozen=True)
class SetLiteral:
    names: tuple = ()


@dataclass(frozen=True)
class SetRef:
    entity: tuple
    attribute: str  # "properties" | "provides"


SetExpr = Union[SetLiteral, SetRef]


@dataclass(frozen=True)
class SubsetOf:
    lhs: SetExpr
    rhs: SetExpr
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Accepts:
    slot: tuple
    candidate: tuple
    extra_properties: tuple = ()
    span: Span = field(default=NO_SPAN, compare=False)


Check = Union[SubsetOf, Accepts]


@dataclass(frozen=True)
class Requirement:
    facility: str
    name: str
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Template:
    name: str
    params: tuple = ()
    provides: tuple = ()
    properties: tuple = ()
    requires: tuple = ()
    checks: tuple = ()
    span: Span = field(default=NO_SPAN, compare=False)

    def requirement(self, name):
        return next((r for r in self.requires if r.name == name), None)


@dataclass(frozen=True)
class ComponentLibrary:
    templates: tuple = ()

    def template(self, name):
        return next((t for t in self.templates if t.name == name), None)

    def __len__(self):
        return len(self.templates)


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    requires: tuple = ()
    checks: tuple = ()
    span: Span = field(default=NO_SPAN, compare=False)

    def requirement(self, name):
        return next((r for r in self.requires if r.name == name), None)


# ==================== SCOPES ====================
@dataclass(frozen=True)
class Resolved:
    """What an entity reference points at inside a template or the problem.

    kind is "requirement" (a requirement in scope), "param" (an own template
    parameter) or "slot" (parameter ``param`` of whatever implements
    ``requirement``).
    """
    kind: str
    requirement: Optional[str] = None
    param: Optional[str] = None


class Scope:
    def __init__(self, requirements, params=()):
        self.requirements = {r.name: r.facility for r in requirements}
        self.params = tuple(params)

    @classmethod
    def for_template(cls, template):
        return cls(template.requires, template.params)

    @classmethod
    def for_problem(cls, problem):
        return cls(problem.requires)

    def resolve(self, ref):
        if len(ref) == 1:
            name = ref[0]
            if name in self.requirements:
                return Resolved("requirement", requirement=name)
            if name in self.params:
                return Resolved("param", param=name)
            return None
        if len(ref) == 2 and ref[0] in self.requirements:
            return Resolved("slot", requirement=ref[0], param=ref[1])
        return None


def dotted(ref):
    return ".".join(ref)


def format_setexpr(expr):
    if isinstance(expr, SetLiteral):
        return "{" + ", ".join(expr.names) + "}"
    return f"{dotted(expr.entity)}.{expr.attribute}"


def format_check(chk):
    """Render a check in canonical surface syntax (without 'check' and ';')."""
    if isinstance(chk, SubsetOf):
        return f"{format_setexpr(chk.lhs)} subsetof {format_setexpr(chk.rhs)}"
    text = f"{dotted(chk.slot)} accepts {dotted(chk.candidate)}"
    if chk.extra_properties:
        text += " with {" + ", ".join(chk.extra_properties) + "}"
    return text


# ==================== PARSER ====================
class _ParseError(Exception):
    def __init__(self, message, span):
        super().__init__(message)
        self.message = message
        self.span = span


def _describe(token):
    if token is None:
        return "end of input"
    if token.kind == "kw":
        return f"'{token.text}'"
    if token.kind == "ident":
        return f"identifier '{token.text}'"
    return f"'{token.text}'"


class Parser:
    """Recursive-descent parser with panic-mode recovery at ';' and '}'."""

    def __init__(self, tokens, filename):
        self.tokens = tokens
        self.filename = filename
        self.pos = 0
        self.diagnostics = []

    # -------------------- token helpers --------------------
    def peek(self, offset=0):
        idx = self.pos + offset
        return self.tokens[idx] if idx < len(self.tokens) else None

    def at_end(self):
        return self.pos >= len(self.tokens)

    def at(self, kind, text=None, offset=0):
        tok = self.peek(offset)
        return tok is not None and tok.kind == kind and (text is None or tok.text == text)

    def here(self):
        tok = self.peek()
        if tok is not None:
            return tok.span
        if self.tokens:
            return self.tokens[-1].span
        return Span(self.filename, 1, 1)

    def advance(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def expect(self, kind, text=None):
        if self.at(kind, text):
            return self.advance()
        wanted = f"'{text}'" if text else (f"'{PUNCT_TEXT[kind]}'" if kind in PUNCT_TEXT else kind)
        if kind == "ident" and text is None:
            wanted = "identifier"
        raise _ParseError(f"expected {wanted} but found {_describe(self.peek())}", self.here())

    def ident(self):
        return self.expect("ident").text

    def identlist(self):
        names = [self.ident()]
        while self.at("comma"):
            self.advance()
            names.append(self.ident())
        return tuple(names)

    def report(self, exc):
        self.diagnostics.append(Diagnostic(ERROR, exc.message, exc.span))

    def error(self, message, span):
        self.diagnostics.append(Diagnostic(ERROR, message, span))

    def warning(self, message, span):
        self.diagnostics.append(Diagnostic(WARNING, message, span))

    def sync_clause(self):
        """Skip to just after the next ';', or up to (not past) the next '}'."""
        while not self.at_end():
            if self.at("semi"):
                self.advance()
                return
            if self.at("rbrace"):
                return
            self.advance()

    def sync_block(self):
        """Skip past the next '}' or up to the next block keyword."""
        while not self.at_end():
            if self.at("rbrace"):
                self.advance()
                return
            if self.at("kw", "template") or self.at("kw", "problem"):
                return
            self.advance()

    # -------------------- grammar --------------------
    def entref(self):
        parts = [self.ident()]
        while self.at("dot") and self.at("ident", offset=1):
            self.advance()
            parts.append(self.ident())
        return tuple(parts)

    def set_attribute(self):
        self.expect("dot")
        tok = self.peek()
        if tok is not None and tok.kind == "kw" and tok.text in SET_ATTRIBUTES:
            return self.advance().text
        raise _ParseError(f"expected 'properties' or 'provides' but found {_describe(tok)}", self.here())

    def set_literal(self):
        self.expect("lbrace")
        names = ()
        if not self.at("rbrace"):
            names = self.identlist()
        self.expect("rbrace")
        return SetLiteral(names)

    def setexpr(self):
        if self.at("lbrace"):
            return self.set_literal()
        ref = self.entref()
        return SetRef(ref, self.set_attribute())

    def check(self, span):
        if self.at("lbrace"):
            lhs = self.set_literal()
            self.expect("kw", "subsetof")
            return SubsetOf(lhs, self.setexpr(), span)
        ref = self.entref()
        if self.at("dot"):
            lhs = SetRef(ref, self.set_attribute())
            self.expect("kw", "subsetof")
            return SubsetOf(lhs, self.setexpr(), span)
        if self.at("kw", "accepts"):
            self.advance()
            candidate = self.entref()
            extra = ()
            if self.at("kw", "with"):
                self.advance()
                self.expect("lbrace")
                extra = self.identlist()
                self.expect("rbrace")
            return Accepts(ref, candidate, extra, span)
        raise _ParseError(
            f"expected 'accepts' or '.properties'/'.provides' but found {_describe(self.peek())}",
            self.here(),
        )

    def requirement_clause(self):
        span = self.expect("kw", "requires").span
        facility = self.ident()
        name = self.ident()
        self.expect("semi")
        return Requirement(facility, name, span)

    def check_clause(self):
        span = self.expect("kw", "check").span
        chk = self.check(span)
        self.expect("semi")
        return chk

    def template(self):
        start = self.expect("kw", "template").span
        try:
            name = self.ident()
            self.expect("lparen")
            params = ()
            if not self.at("rparen"):
                params = self.identlist()
            self.expect("rparen")
            self.expect("lbrace")
        except _ParseError as exc:
            self.report(exc)
            self.sync_block()
            return None

        clause_rank = {"provides": 0, "properties": 1, "requires": 2, "check": 3}
        provides, properties, requires, checks = None, (), [], []
        last_rank = -1
        while not self.at("rbrace"):
            if self.at_end():
                self.error(f"expected '}}' to close template '{name}' but found end of input", self.here())
                break
            tok = self.peek()
            try:
                if tok.kind != "kw" or tok.text not in clause_rank:
                    raise _ParseError(
                        "expected 'provides', 'properties', 'requires' or 'check' "
                        f"but found {_describe(tok)}", tok.span)
                rank = clause_rank[tok.text]
                if rank < last_rank or (rank == last_rank and rank < 2):
                    self.error(f"'{tok.text}' clause out of order in template '{name}'", tok.span)
                last_rank = max(last_rank, rank)
                if tok.text == "provides":
                    self.advance()
                    names = self.identlist()
                    self.expect("semi")
                    provides = (provides or ()) + names
                elif tok.text == "properties":
                    self.advance()
                    names = self.identlist()
                    self.expect("semi")
                    properties = properties + names
                elif tok.text == "requires":
                    requires.append(self.requirement_clause())
                else:
                    checks.append(self.check_clause())
            except _ParseError as exc:
                self.report(exc)
                self.sync_clause()
        if self.at("rbrace"):
            self.advance()
        if provides is None:
            self.error(f"template '{name}' has no 'provides' clause", start)
        return Template(name, params, provides or (), properties, tuple(requires), tuple(checks), start)

    def library(self):
        templates = []
        while not self.at_end():
            if self.at("kw", "template"):
                tmpl = self.template()
                if tmpl is not None:
                    templates.append(tmpl)
                continue
            self.error(f"expected 'template' but found {_describe(self.peek())}", self.here())
            self.advance()
            self.sync_block()
        return templates

    def problem(self):
        if not self.at("kw", "problem"):
            self.error(f"expected 'problem' but found {_describe(self.peek())}", self.here())
            return None
        start = self.advance().span
        try:
            name = self.ident()
            self.expect("lbrace")
        except _ParseError as exc:
            self.report(exc)
            return None
        requires, checks = [], []
        while not self.at("rbrace"):
            if self.at_end():
                self.error(f"expected '}}' to close problem '{name}' but found end of input", self.here())
                break
            tok = self.peek()
            try:
                if self.at("kw", "requires"):
                    if checks:
                        self.error(f"'requires' clause out of order in problem '{name}'", tok.span)
                    requires.append(self.requirement_clause())
                elif self.at("kw", "check"):
                    checks.append(self.check_clause())
                else:
                    raise _ParseError(f"expected 'requires' or 'check' but found {_describe(tok)}", tok.span)
            except _ParseError as exc:
                self.report(exc)
                self.sync_clause()
        if self.at("rbrace"):
            self.advance()
        if not self.at_end():
            self.error(f"unexpected {_describe(self.peek())} after problem '{name}'", self.here())
        return ProblemSpec(name, tuple(requires), tuple(checks), start)


# ==================== REFERENCE CHECKS ====================
def _check_unique(names_with_spans, what, owner, diagnostics):
    seen = set()
    for name, span in names_with_spans:
        if name in seen:
            diagnostics.append(Diagnostic(ERROR, f"duplicate {what} '{name}' in {owner}", span))
        seen.add(name)


def _check_references(scope, checks, owner, diagnostics, problem_scope=False):
    def refs(chk):
        if isinstance(chk, SubsetOf):
            return [side.entity for side in (chk.lhs, chk.rhs) if isinstance(side, SetRef)]
        return [chk.slot, chk.candidate]

    for chk in checks:
        for ref in refs(chk):
            if scope.resolve(ref) is not None:
                continue
            if len(ref) > 2:
                msg = f"reference '{dotted(ref)}' is too deep in {owner}"
            elif problem_scope:
                msg = f"unknown requirement '{ref[0]}' in {owner}"
            else:
                msg = f"unknown requirement or parameter '{ref[0]}' in {owner}"
            diagnostics.append(Diagnostic(ERROR, msg, chk.span))


def _check_template(template, diagnostics):
    owner = f"template '{template.name}'"
    local = [(p, template.span) for p in template.params] + [(r.name, r.span) for r in template.requires]
    _check_unique(local, "parameter or requirement name", owner, diagnostics)
    _check_references(Scope.for_template(template), template.checks, owner, diagnostics)


def parse_library(text, filename="<library>"):
    """Parse a component library. Returns (ComponentLibrary, diagnostics)."""
    tokens, diagnostics = tokenize(text, filename)
    parser = Parser(tokens, filename)
    parsed = parser.library()
    diagnostics.extend(parser.diagnostics)

    templates = []
    first_seen = {}
    for tmpl in parsed:
        if tmpl.name in first_seen:
            diagnostics.append(Diagnostic(
                ERROR, f"duplicate template '{tmpl.name}' (first declared at {first_seen[tmpl.name]})", tmpl.span))
            continue
        first_seen[tmpl.name] = tmpl.span
        _check_template(tmpl, diagnostics)
        templates.append(tmpl)

    logger.debug("Parsed %d templates from %s", len(templates), filename)
    return ComponentLibrary(tuple(templates)), diagnostics


def parse_problem(text, filename="<problem>"):
    """Parse a problem meta-component. Returns (ProblemSpec, diagnostics)."""
    tokens, diagnostics = tokenize(text, filename)
    parser = Parser(tokens, filename)
    problem = parser.problem()
    diagnostics.extend(parser.diagnostics)
    if problem is None:
        return ProblemSpec(""), diagnostics

    owner = f"problem '{problem.name}'"
    _check_unique([(r.name, r.span) for r in problem.requires], "requirement", owner, diagnostics)
    _check_references(Scope.for_problem(problem), problem.checks, owner, diagnostics, problem_scope=True)
    if not problem.requires:
        diagnostics.append(Diagnostic(WARNING, f"problem '{problem.name}' has no requirements", problem.span))
    return problem, diagnostics


def merge_libraries(libraries):
    """Concatenate parsed libraries; a later duplicate template name is an error."""
    templates = []
    first_seen = {}
    diagnostics = []
    for library in libraries:
        for tmpl in library.templates:
            if tmpl.name in first_seen:
                diagnostics.append(Diagnostic(
                    ERROR, f"duplicate template '{tmpl.name}' (first declared at {first_seen[tmpl.name]})",
                    tmpl.span))
                continue
            first_seen[tmpl.name] = tmpl.span
            templates.append(tmpl)
    return ComponentLibrary(tuple(templates)), diagnostics


# ==================== VALIDATION ====================
def _providers_by_facility(library):
    index = {}
    for tmpl in library.templates:
        for facility in tmpl.provides:
            index.setdefault(facility, []).append(tmpl)
    return index


def _validate_checks(scope, checks, owner, providers, diagnostics):
    for chk in checks:
        if isinstance(chk, SubsetOf):
            sides = (chk.lhs, chk.rhs)
            literals = [s for s in sides if isinstance(s, SetLiteral)]
            if len(literals) == 2:
                diagnostics.append(Diagnostic(ERROR, f"both sides of 'subsetof' are literal sets in {owner}", chk.span))
                continue
            if not literals:
                diagnostics.append(Diagnostic(
                    ERROR, f"'subsetof' between two entity sets is not supported in {owner}", chk.span))
                continue
            ref = chk.lhs if isinstance(chk.lhs, SetRef) else chk.rhs
            resolved = scope.resolve(ref.entity)
            if resolved is not None and resolved.kind == "slot":
                diagnostics.append(Diagnostic(
                    ERROR, f"'subsetof' on parameter slot '{dotted(ref.entity)}' is not supported in {owner}; "
                    "state it inside the implementing template", chk.span))
            continue

        slot = scope.resolve(chk.slot)
        cand = scope.resolve(chk.candidate)
        if slot is not None and slot.kind == "requirement":
            diagnostics.append(Diagnostic(ERROR, f"'{dotted(chk.slot)}' is not a parameter slot in {owner}", chk.span))
        elif slot is not None and slot.kind == "slot":
            facility = scope.requirements[slot.requirement]
            if not any(slot.param in t.params for t in providers.get(facility, [])):
                diagnostics.append(Diagnostic(
                    ERROR, f"no implementation of '{slot.requirement}' takes parameter '{slot.param}'", chk.span))
        if cand is not None and cand.kind != "requirement":
            diagnostics.append(Diagnostic(
                ERROR, f"'{dotted(chk.candidate)}' is not a requirement in {owner}", chk.span))


def _find_cycles(library, providers):
    graph = {
        t.name: [u.name for r in t.requires for u in providers.get(r.facility, [])]
        for t in library.templates
    }
    cycles = []
    seen_keys = set()
    state = {}
    stack = []

    def visit(name):
        state[name] = "active"
        stack.append(name)
        for nxt in graph.get(name, []):
            if state.get(nxt) == "active":
                cycle = stack[stack.index(nxt):]
                pivot = cycle.index(min(cycle))
                key = tuple(cycle[pivot:] + cycle[:pivot])
                if key not in seen_keys:
                    seen_keys.add(key)
                    cycles.append(list(key) + [key[0]])
            elif nxt not in state:
                visit(nxt)
        stack.pop()
        state[name] = "done"

    for tmpl in library.templates:
        if tmpl.name not in state:
            visit(tmpl.name)
    return cycles


def validate(library, problem):
    """Cross-reference checks over a parsed library and problem. Returns diagnostics."""
    diagnostics = []
    providers = _providers_by_facility(library)

    requirements = [(r, f"problem '{problem.name}'") for r in problem.requires]
    requirements += [(r, f"template '{t.name}'") for t in library.templates for r in t.requires]
    for req, owner in requirements:
        if req.facility not in providers:
            diagnostics.append(Diagnostic(ERROR, f"no implementation provides '{req.facility}'", req.span))

    for tmpl in library.templates:
        _validate_checks(Scope.for_template(tmpl), tmpl.checks, f"template '{tmpl.name}'", providers, diagnostics)
    _validate_checks(Scope.for_problem(problem), problem.checks, f"problem '{problem.name}'", providers, diagnostics)

    for cycle in _find_cycles(library, providers):
        span = library.template(cycle[0]).span
        diagnostics.append(Diagnostic(WARNING, f"cyclic requirement chain: {' -> '.join(cycle)}", span))

    required = {req.facility for req, _ in requirements}
    for tmpl in library.templates:
        if not required.intersection(tmpl.provides):
            diagnostics.append(Diagnostic(WARNING, f"template '{tmpl.name}' provides nothing that is required", tmpl.span))

    logger.debug("Validation produced %d diagnostics", len(diagnostics))
    return diagnostics


# ==================== RESULTS ====================
@dataclass(frozen=True)
class Configuration:
    """Chosen implementation per active requirement path, sorted by path."""
    choices: tuple = ()

    @classmethod
    def from_mapping(cls, mapping):
        return cls(tuple(sorted(mapping.items())))

    def as_dict(self):
        return dict(self.choices)

    def paths(self):
        return [path for path, _ in self.choices]

    def __getitem__(self, path):
        return self.as_dict()[path]

    def __contains__(self, path):
        return any(p == path for p, _ in self.choices)

    def __len__(self):
        return len(self.choices)
