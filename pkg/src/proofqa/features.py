"""Hashed bag-of-tokens features for statements and the whole instance.

Each context sentence is encoded together with the query: its bag holds the
surface words, role tags read off the parsed statement (fact/rule, head and
body attributes, negation), relational tags that compare the statement with
the query and with the rest of the context (does this fact match the queried
atom, could this rule fire for the queried entity, does this sentence support
such a rule), namespaced query tokens, and crossings between the statement's
tags and the query's tokens.  The relational tags stand in for the
query-contextualised sentence vectors a large cross-attention encoder would
produce: they expose to a shallow network the same entity/attribute
correspondences such an encoder extracts, while remaining deterministic
functions of the parsed instance.

The instance-level bag (for the answer representation) is the plain token
multiset of context plus query, extended with summary tags aggregated over
the context and their crossings with the query tokens, so it is invariant
under reordering of the context sentences.

Token strings are mapped to embedding rows with a stable 64-bit blake2b
hash, so features never depend on interpreter hash randomisation.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

import numpy as np

from .theory import FACT, VAR, Query, Statement, Theory

_WORD_RE = re.compile(r"[A-Za-z]+")


def hash_token(token: str, hash_dim: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % hash_dim


def _words(text: str) -> list[str]:
    return _WORD_RE.findall(text)


@dataclass
class _Analysis:
    """Relational view of one (theory, query) pair, anchored to the query entity.

    ``fire`` maps rule positions to the chaining round (1 or 2) in which the
    rule's body becomes satisfied for the queried entity, taking facts as
    round-0 ground truth and treating negated body attributes as satisfied
    when no fact asserts them.  ``proving`` are fired rules whose head is the
    queried attribute; ``sup`` marks statements reachable from a proving rule
    through positive body literals (the statements a minimal derivation of
    the queried atom would draw on).
    """

    match_code: dict[int, str] = field(default_factory=dict)
    ent_ok: set[int] = field(default_factory=set)
    fire: dict[int, int] = field(default_factory=dict)
    proving: set[int] = field(default_factory=set)
    sup: set[int] = field(default_factory=set)
    d0: bool = False
    d1: bool = False
    d1n: bool = False


def _analyze(theory: Theory, q: Query) -> _Analysis:
    e, a = q.atom.entity, q.atom.attribute
    out = _Analysis()
    facts: set[str] = set()
    fact_pos: dict[str, list[int]] = {}
    for k, s in enumerate(theory.statements):
        if s.kind != FACT:
            continue
        code = ("e" if s.fact.entity == e else "") + ("a" if s.fact.attribute == a else "")
        out.match_code[k] = code or "0"
        if s.fact.entity == e:
            facts.add(s.fact.attribute)
            fact_pos.setdefault(s.fact.attribute, []).append(k)
    out.d0 = a in facts

    for k, s in enumerate(theory.statements):
        if s.kind == FACT:
            continue
        subj = s.head.subject
        if subj == VAR or subj == e:
            out.ent_ok.add(k)

    derived = set(facts)
    for rnd in (1, 2):
        for k, s in enumerate(theory.statements):
            if s.kind == FACT or k in out.fire or k not in out.ent_ok:
                continue
            ok = all((lit.attribute not in facts) if lit.negated
                     else (lit.attribute in derived)
                     for lit in s.body)
            if ok:
                out.fire[k] = rnd
        derived = facts | {theory.statements[k].head.attribute for k in out.fire}

    out.proving = {k for k in out.fire if theory.statements[k].head.attribute == a}
    out.d1 = bool(out.proving)

    seen: set[int] = set()
    queue = sorted(out.proving)
    while queue:
        k = queue.pop()
        if k in seen:
            continue
        seen.add(k)
        s = theory.statements[k]
        if any(lit.negated for lit in s.body):
            out.d1n = True
        for lit in s.body:
            if lit.negated:
                continue
            out.sup.update(fact_pos.get(lit.attribute, ()))
            for j, fired in out.fire.items():
                if fired < out.fire[k] and \
                        theory.statements[j].head.attribute == lit.attribute:
                    out.sup.add(j)
                    queue.append(j)
    return out


def _statement_tags(s: Statement, pos: int, rel: _Analysis) -> list[str]:
    if s.kind == FACT:
        return [
            "F",
            f"F:e={s.fact.entity}",
            f"F:a={s.fact.attribute}",
            f"F:m={rel.match_code.get(pos, '0')}",
            f"F:sup={1 if pos in rel.sup else 0}",
        ]
    tags = ["R", f"H:a={s.head.attribute}"]
    if s.head.subject != VAR:
        tags.append(f"R:e={s.head.subject}")
    for lit in s.body:
        prefix = "BN" if lit.negated else "B"
        tags.append(f"{prefix}:a={lit.attribute}")
        if lit.subject != VAR:
            tags.append(f"R:e={lit.subject}")
    tags.append(f"R:ent={1 if pos in rel.ent_ok else 0}")
    tags.append(f"R:fire={rel.fire.get(pos, 0)}")
    tags.append(f"R:prv={1 if pos in rel.proving else 0}")
    tags.append(f"R:sup={1 if pos in rel.sup else 0}")
    return tags


def _query_tags(q: Query) -> list[str]:
    tags = [f"Q:e={q.atom.entity}", f"Q:a={q.atom.attribute}"]
    if q.negated:
        tags.append("Q:neg")
    return tags


def _instance_tags(rel: _Analysis) -> list[str]:
    return [
        f"G:d0={1 if rel.d0 else 0}",
        f"G:d1={1 if rel.d1 else 0}",
        f"G:d={1 if (rel.d0 or rel.d1) else 0}",
        f"G:d1n={1 if rel.d1n else 0}",
    ]


def statement_tokens(s: Statement, q: Query, pos: int = 0,
                     rel: _Analysis | None = None,
                     theory: Theory | None = None) -> list[str]:
    if rel is None:
        rel = _analyze(theory if theory is not None else Theory((s,)), q)
    s_tags = _statement_tags(s, pos, rel)
    q_tags = _query_tags(q)
    tokens = _words(s.text)
    tokens += s_tags
    tokens += ["q|" + w for w in _words(q.text)]
    tokens += [f"{st}*{qt}" for st in s_tags for qt in q_tags]
    return tokens


def instance_tokens(theory: Theory, q: Query,
                    rel: _Analysis | None = None) -> list[str]:
    if rel is None:
        rel = _analyze(theory, q)
    tokens = []
    for s in theory.statements:
        tokens += _words(s.text)
    tokens += _words(q.text)
    q_tags = _query_tags(q)
    g_tags = _instance_tags(rel)
    tokens += g_tags
    tokens += [f"G|{gt}*{qt}" for gt in g_tags for qt in q_tags]
    for pos, s in enumerate(theory.statements):
        tokens += [f"G|{st}*{qt}"
                   for st in _statement_tags(s, pos, rel) for qt in q_tags]
    return tokens


@dataclass
class Features:
    """Hashed token index arrays for one (theory, query) instance.

    ``node_idx[k]`` holds the bag for statement k (0-based over statements;
    the NAF node has no bag of its own, its representation is derived from
    the instance-level one).  ``pair_src``/``pair_dst`` give the row-major
    ordered-pair layout over m = len(theory) + 1 nodes including NAF.
    """

    cls_idx: np.ndarray
    node_idx: list[np.ndarray]
    pair_src: np.ndarray
    pair_dst: np.ndarray
    m: int


def featurize(theory: Theory, query: Query, hash_dim: int) -> Features:
    rel = _analyze(theory, query)
    node_idx = [
        np.array([hash_token(t, hash_dim)
                  for t in statement_tokens(s, query, pos, rel)],
                 dtype=np.int64)
        for pos, s in enumerate(theory.statements)
    ]
    cls_idx = np.array(
        [hash_token(t, hash_dim) for t in instance_tokens(theory, query, rel)],
        dtype=np.int64)
    m = len(theory.statements) + 1
    src = np.array([i for i in range(m) for j in range(m) if i != j], dtype=np.int64)
    dst = np.array([j for i in range(m) for j in range(m) if i != j], dtype=np.int64)
    return Features(cls_idx=cls_idx, node_idx=node_idx, pair_src=src, pair_dst=dst, m=m)
