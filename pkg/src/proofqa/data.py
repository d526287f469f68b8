"""Synthetic theory/query generation and the JSONL dataset format.

Theories are sampled with a stratification guarantee baked in: a dedicated
slice of the attribute pool may appear negated in rule bodies but is never
eligible as a rule head.  Queries are drawn from the closed-world truth
table of the sampled theory with target answers alternating true/false, so
emitted files stay balanced; the per-example RNG streams are derived from
(seed, index) and make generation order-independent and reproducible.

Each JSONL line is one example with the fixed field order

    {"id", "context": [{"id", "kind", "text"}], "query", "answer", "depth",
     "proofs": [{"nodes": [...], "edges": [[src, dst], ...]}]}

with "NAF" reserved for the negation-as-failure node, UTF-8 text and LF
line endings.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .errors import ResampleExhausted, SchemaError
from .reasoner import Example, ProofGraph, answer_query, extract_proofs, forward_chain, query_depth
from .theory import (FACT, RULE, Atom, Literal, Query, Statement, Theory,
                     parse_query, parse_statement, render_fact, render_query,
                     render_statement)

ENTITY_POOL = ("Alan", "Bob", "Carol", "Dave", "Erin", "Fred", "Gina", "Hugo")
ATTRIBUTE_POOL = ("young", "kind", "green", "big", "blue", "round", "red", "smart",
                  "quiet", "rough", "furry", "nice", "cold", "happy", "tall", "sad")

#: Cap on gold proofs stored per example.
PROOF_CAP = 8
#: Rejection-sampling budget per example.
MAX_ATTEMPTS = 1000
#: Chance that a sampled rule is grounded on one entity instead of "someone".
_GROUNDED_RULE_P = 0.15


@dataclass(frozen=True)
class GenConfig:
    num_examples: int = 100
    max_depth: int = 1
    num_entities: int = 2
    num_attributes: int = 8
    facts_range: tuple[int, int] = (2, 5)
    rules_range: tuple[int, int] = (3, 8)
    max_body: int = 2
    naf_rule_fraction: float = 0.25
    seed: int = 0

    def entities(self) -> tuple[str, ...]:
        return ENTITY_POOL[: self.num_entities]

    def attributes(self) -> tuple[str, ...]:
        return ATTRIBUTE_POOL[: self.num_attributes]


def _split_pools(cfg: GenConfig) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """(head-eligible attributes, negation-only attributes)."""
    attrs = cfg.attributes()
    reserve = max(1, len(attrs) // 4)
    return attrs[:-reserve], attrs[-reserve:]


def _sample_theory(cfg: GenConfig, rng: random.Random) -> Theory:
    entities = cfg.entities()
    attrs = cfg.attributes()
    head_pool, naf_pool = _split_pools(cfg)

    texts: set[str] = set()
    statements: list[tuple[str, object]] = []  # (kind, payload)

    n_facts = rng.randint(*cfg.facts_range)
    guard = 0
    while sum(1 for k, _ in statements if k == FACT) < n_facts:
        guard += 1
        if guard > 200:
            break
        atom = Atom(rng.choice(entities), rng.choice(attrs))
        text = render_fact(atom)
        if text not in texts:
            texts.add(text)
            statements.append((FACT, atom))

    n_rules = rng.randint(*cfg.rules_range)
    guard = 0
    while sum(1 for k, _ in statements if k == RULE) < n_rules:
        guard += 1
        if guard > 400:
            break
        body_len = rng.randint(1, max(1, min(cfg.max_body, len(attrs))))
        body_attrs = rng.sample(attrs, body_len)
        negate = rng.random() < cfg.naf_rule_fraction
        subject = rng.choice(entities) if rng.random() < _GROUNDED_RULE_P else "someone"
        body = []
        for pos, attr in enumerate(body_attrs):
            if negate and pos == 0:
                body.append(Literal(subject, rng.choice(naf_pool), negated=True))
            else:
                body.append(Literal(subject, attr))
        used = {lit.attribute for lit in body}
        head_choices = [a for a in head_pool if a not in used]
        if not head_choices:
            continue
        head = Literal(subject, rng.choice(head_choices))
        if len({lit.attribute for lit in body}) != len(body):
            continue
        draft = Statement(id="draft", kind=RULE, body=tuple(body), head=head)
        text = render_statement(draft)
        if text not in texts:
            texts.add(text)
            statements.append((RULE, (tuple(body), head)))

    rng.shuffle(statements)
    built: list[Statement] = []
    counters = {FACT: 0, RULE: 0}
    for kind, payload in statements:
        counters[kind] += 1
        sid = ("F" if kind == FACT else "R") + str(counters[kind])
        if kind == FACT:
            built.append(Statement(id=sid, kind=FACT, fact=payload,
                                   text=render_fact(payload)))
        else:
            body, head = payload
            draft = Statement(id=sid, kind=RULE, body=body, head=head)
            built.append(Statement(id=sid, kind=RULE, body=body, head=head,
                                   text=render_statement(draft)))
    return Theory(tuple(built))


def _candidate_queries(cfg: GenConfig, ds, target: bool):
    """(query, depth, proofs) for every admissible query with the target answer."""
    out = []
    for entity in cfg.entities():
        for attr in cfg.attributes():
            for negated in (False, True):
                query = Query(Atom(entity, attr), negated,
                              render_query(Query(Atom(entity, attr), negated)))
                if answer_query(ds, query) != target:
                    continue
                proofs = extract_proofs(ds, query, cap=PROOF_CAP)
                depth = query_depth(proofs)
                if depth <= cfg.max_depth:
                    out.append((query, depth, proofs))
    return out


def generate_example(cfg: GenConfig, index: int) -> Example:
    """One example from the stream position ``index``; answers alternate."""
    rng = random.Random(f"{cfg.seed}:{index}")
    target = index % 2 == 0
    for _ in range(MAX_ATTEMPTS):
        theory = _sample_theory(cfg, rng)
        if len(theory.statements) < 2:
            continue
        ds = forward_chain(theory)
        candidates = _candidate_queries(cfg, ds, target)
        if not candidates:
            continue
        depths = sorted({d for _q, d, _p in candidates})
        depth = rng.choice(depths)
        pool = [c for c in candidates if c[1] == depth]
        query, depth, proofs = rng.choice(pool)
        return Example(id=f"ex{index:05d}", theory=theory, query=query,
                       answer=target, depth=depth, gold_proofs=proofs)
    raise ResampleExhausted(
        f"no admissible example at index {index} after {MAX_ATTEMPTS} attempts")


def generate_examples(cfg: GenConfig) -> list[Example]:
    return [generate_example(cfg, i) for i in range(cfg.num_examples)]


# ---------------------------------------------------------------------------
# serialization

_EXAMPLE_FIELDS = ("id", "context", "query", "answer", "depth", "proofs")
_CONTEXT_FIELDS = ("id", "kind", "text")
_PROOF_FIELDS = ("nodes", "edges")


def example_to_dict(ex: Example) -> dict:
    return {
        "id": ex.id,
        "context": [{"id": s.id, "kind": s.kind, "text": s.text}
                    for s in ex.theory.statements],
        "query": ex.query.text,
        "answer": bool(ex.answer),
        "depth": int(ex.depth),
        "proofs": [{"nodes": sorted(p.nodes),
                    "edges": sorted([list(e) for e in p.edges])}
                   for p in ex.gold_proofs],
    }


def write_examples(path, examples):
    """UTF-8 JSONL with LF endings; key order is fixed by construction."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ex in examples:
            fh.write(json.dumps(example_to_dict(ex), ensure_ascii=False,
                                separators=(",", ":")) + "\n")


def _require_fields(obj: dict, fields, line: int, what: str):
    missing = [f for f in fields if f not in obj]
    unknown = [f for f in obj if f not in fields]
    if missing:
        raise SchemaError(f"{what} missing fields {missing}", line)
    if unknown:
        raise SchemaError(f"{what} has unknown fields {unknown}", line)


def example_from_dict(obj: dict, line: int = 0) -> Example:
    _require_fields(obj, _EXAMPLE_FIELDS, line, "example")
    if not isinstance(obj["id"], str):
        raise SchemaError("id must be a string", line)
    if not isinstance(obj["answer"], bool):
        raise SchemaError("answer must be true or false", line)
    if not isinstance(obj["depth"], int) or isinstance(obj["depth"], bool) or obj["depth"] < 0:
        raise SchemaError("depth must be a non-negative integer", line)

    statements = []
    for entry in obj["context"]:
        _require_fields(entry, _CONTEXT_FIELDS, line, "context entry")
        stmt = parse_statement(entry["text"], entry["id"])
        if stmt.kind != entry["kind"]:
            raise SchemaError(
                f"context entry {entry['id']} declared {entry['kind']} "
                f"but parses as {stmt.kind}", line)
        statements.append(stmt)
    theory = Theory(tuple(statements))

    proofs = []
    for p in obj["proofs"]:
        _require_fields(p, _PROOF_FIELDS, line, "proof")
        for edge in p["edges"]:
            if len(edge) != 2:
                raise SchemaError(f"edge {edge} must be a [src, dst] pair", line)
        proofs.append(ProofGraph.make(p["nodes"], [tuple(e) for e in p["edges"]]))

    return Example(id=obj["id"], theory=theory, query=parse_query(obj["query"]),
                   answer=obj["answer"], depth=obj["depth"],
                   gold_proofs=tuple(proofs))


def read_examples(path) -> list[Example]:
    out = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc.msg}", lineno) from exc
        if not isinstance(obj, dict):
            raise SchemaError("line is not a JSON object", lineno)
        out.append(example_from_dict(obj, lineno))
    return out
