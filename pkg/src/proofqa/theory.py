"""Templated-English rule language: parsing, rendering, and the symbolic types.

The surface grammar (one sentence per statement, trailing period required):

    fact  :=  ENTITY "is" ATTR "."
    rule  :=  "If" cond ("and" cond)* "then" concl "."
    cond  :=  SUBJ "is" ["not"] ATTR
    concl :=  SUBJ "is" ATTR
    query :=  ENTITY "is" ["not"] ATTR "."
    SUBJ  :=  ENTITY | "someone"
    ENTITY := /[A-Z][a-z]*/        ATTR := /[a-z]+/

"someone" is the single shared rule variable; a rule may instead be grounded
on one entity, but mixing the variable with an entity inside one rule is
rejected.  Canonical text uses single spaces and keeps the trailing period.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import InvalidTheory, ParseError

FACT = "fact"
RULE = "rule"

#: Subject token standing for the shared rule variable.
VAR = "someone"

_RESERVED = frozenset({"if", "is", "not", "then", "and", "someone"})
_RESERVED_CAP = frozenset({"If", "Is", "Not", "Then", "And", "Someone"})
_ENTITY_RE = re.compile(r"[A-Z][a-z]*\Z")
_ATTR_RE = re.compile(r"[a-z]+\Z")
_TOKEN_RE = re.compile(r"[A-Za-z]+|\S")


@dataclass(frozen=True)
class Atom:
    """Ground proposition: ``attribute`` holds for ``entity``."""

    entity: str
    attribute: str

    def __post_init__(self):
        if not _ENTITY_RE.match(self.entity) or self.entity in _RESERVED_CAP:
            raise InvalidTheory(f"bad entity token {self.entity!r}")
        if not _ATTR_RE.match(self.attribute) or self.attribute in _RESERVED:
            raise InvalidTheory(f"bad attribute token {self.attribute!r}")


@dataclass(frozen=True)
class Literal:
    """Possibly negated condition; ``subject`` is an entity name or VAR."""

    subject: str
    attribute: str
    negated: bool = False

    def ground(self, entity: str) -> Atom:
        return Atom(entity if self.subject == VAR else self.subject, self.attribute)


@dataclass(frozen=True)
class Statement:
    """One context sentence, either a fact or a rule, with canonical text."""

    id: str
    kind: str
    fact: Atom | None = None
    body: tuple[Literal, ...] = ()
    head: Literal | None = None
    text: str = ""


@dataclass(frozen=True)
class Query:
    atom: Atom
    negated: bool = False
    text: str = ""


@dataclass(frozen=True)
class Theory:
    statements: tuple[Statement, ...] = ()

    def __post_init__(self):
        ids = [s.id for s in self.statements]
        if len(set(ids)) != len(ids):
            raise InvalidTheory("duplicate statement ids")
        entities, attributes = set(), set()
        for s in self.statements:
            for lit in _literals(s):
                if lit.subject != VAR:
                    entities.add(lit.subject)
                attributes.add(lit.attribute)
        clash = entities & attributes
        if clash:
            raise InvalidTheory(f"tokens used as both entity and attribute: {sorted(clash)}")

    def __len__(self) -> int:
        return len(self.statements)

    def by_id(self, sid: str) -> Statement:
        for s in self.statements:
            if s.id == sid:
                return s
        raise KeyError(sid)

    def index_of(self, sid: str) -> int:
        for k, s in enumerate(self.statements):
            if s.id == sid:
                return k
        raise KeyError(sid)

    def entities(self) -> set[str]:
        out = set()
        for s in self.statements:
            for lit in _literals(s):
                if lit.subject != VAR:
                    out.add(lit.subject)
        return out

    def attributes(self) -> set[str]:
        return {lit.attribute for s in self.statements for lit in _literals(s)}


def _literals(s: Statement):
    if s.kind == FACT:
        yield Literal(s.fact.entity, s.fact.attribute)
    else:
        yield from s.body
        yield s.head


class _Tokens:
    def __init__(self, text: str):
        self.items = [(m.group(), m.start()) for m in _TOKEN_RE.finditer(text)]
        self.pos = 0
        self.end = len(text)

    def peek(self) -> tuple[str, int]:
        if self.pos >= len(self.items):
            return "", self.end
        return self.items[self.pos]

    def next(self) -> tuple[str, int]:
        tok = self.peek()
        self.pos += 1
        return tok

    def expect(self, word: str):
        tok, off = self.next()
        if tok != word:
            raise ParseError(f"expected {word!r}, found {tok!r}", off)


def _entity(toks: _Tokens) -> str:
    tok, off = toks.next()
    if not _ENTITY_RE.match(tok) or tok in _RESERVED_CAP:
        raise ParseError(f"expected entity, found {tok!r}", off)
    return tok


def _attr(toks: _Tokens) -> str:
    tok, off = toks.next()
    if not _ATTR_RE.match(tok) or tok in _RESERVED:
        raise ParseError(f"expected attribute, found {tok!r}", off)
    return tok


def _subject(toks: _Tokens) -> tuple[str, int]:
    tok, off = toks.peek()
    if tok == VAR:
        toks.next()
        return VAR, off
    return _entity(toks), off


def _finish(toks: _Tokens):
    toks.expect(".")
    tok, off = toks.peek()
    if tok:
        raise ParseError(f"trailing text {tok!r} after period", off)


def parse_statement(text: str, sid: str) -> Statement:
    """Parse one context sentence; the result carries canonical text."""
    toks = _Tokens(text)
    first, off = toks.peek()
    if not first:
        raise ParseError("empty statement", off)
    if first == "If":
        return _parse_rule(toks, sid)
    entity = _entity(toks)
    toks.expect("is")
    tok, off = toks.peek()
    if tok == "not":
        raise ParseError("facts must be positive", off)
    attr = _attr(toks)
    _finish(toks)
    atom = Atom(entity, attr)
    return Statement(id=sid, kind=FACT, fact=atom, text=render_fact(atom))


def _parse_rule(toks: _Tokens, sid: str) -> Statement:
    toks.expect("If")
    body: list[Literal] = []
    subjects: list[tuple[str, int]] = []

    def condition(allow_not: bool) -> Literal:
        subj, off = _subject(toks)
        subjects.append((subj, off))
        toks.expect("is")
        negated = False
        tok, noff = toks.peek()
        if tok == "not":
            if not allow_not:
                raise ParseError("rule heads must be positive", noff)
            toks.next()
            negated = True
        return Literal(subj, _attr(toks), negated)

    body.append(condition(allow_not=True))
    while toks.peek()[0] == "and":
        toks.next()
        body.append(condition(allow_not=True))
    toks.expect("then")
    head = condition(allow_not=False)
    _finish(toks)

    first = subjects[0][0]
    for subj, off in subjects[1:]:
        if subj != first:
            raise ParseError("all subjects in a rule must match", off)
    draft = Statement(id=sid, kind=RULE, body=tuple(body), head=head)
    return Statement(id=sid, kind=RULE, body=draft.body, head=draft.head,
                     text=render_statement(draft))


def parse_query(text: str) -> Query:
    toks = _Tokens(text)
    tok, off = toks.peek()
    if not tok:
        raise ParseError("empty query", off)
    if tok == VAR:
        raise ParseError("queries must name an entity", off)
    entity = _entity(toks)
    toks.expect("is")
    negated = False
    if toks.peek()[0] == "not":
        toks.next()
        negated = True
    attr = _attr(toks)
    _finish(toks)
    atom = Atom(entity, attr)
    return Query(atom=atom, negated=negated, text=render_query(Query(atom, negated)))


def render_fact(atom: Atom) -> str:
    return f"{atom.entity} is {atom.attribute}."


def _render_literal(lit: Literal) -> str:
    neg = "not " if lit.negated else ""
    return f"{lit.subject} is {neg}{lit.attribute}"


def render_statement(s: Statement) -> str:
    """Canonical surface form: single spaces, trailing period."""
    if s.kind == FACT:
        return render_fact(s.fact)
    conds = " and ".join(_render_literal(lit) for lit in s.body)
    return f"If {conds} then {_render_literal(s.head)}."


def render_query(q: Query) -> str:
    neg = "not " if q.negated else ""
    return f"{q.atom.entity} is {neg}{q.atom.attribute}."


def theory_from_texts(texts: list[str]) -> Theory:
    """Build a theory from raw sentences, assigning F1../R1.. ids by kind order."""
    statements = []
    counts = {FACT: 0, RULE: 0}
    for text in texts:
        probe = parse_statement(text, "probe")
        counts[probe.kind] += 1
        sid = ("F" if probe.kind == FACT else "R") + str(counts[probe.kind])
        statements.append(parse_statement(text, sid))
    return Theory(tuple(statements))
