"""Closed-world forward chaining and minimal proof-graph extraction.

Negation-as-failure is allowed only under stratification: an attribute that
occurs negated in some rule body must not occur in any rule head.  Under that
precondition a negated condition can be settled against the current derived
set at any point of the fixpoint computation, because nothing can ever make
it true later.

Proof graphs are DAGs over statement ids plus the single shared "NAF" node.
Every edge points at a rule node: fact -> rule and NAF -> rule feed premises,
rule_a -> rule_b chains a derived head into a premise of the next rule.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import EmptyTheory, StratificationError
from .theory import FACT, RULE, Atom, Query, Statement, Theory

#: Reserved id of the shared negation-as-failure node.
NAF = "NAF"

#: Per-atom bound on enumerated derivations before minimality filtering.
_ENUM_LIMIT = 64


@dataclass(frozen=True)
class DerivationStep:
    """One satisfying rule application: ``rule_id`` fired on ``premises``."""

    rule_id: str
    premises: tuple[Atom, ...]
    naf: tuple[Atom, ...]  # atoms whose absence the rule relied on


@dataclass
class DerivationSet:
    derived: frozenset[Atom]
    depth: dict[Atom, int]
    supports: dict[Atom, tuple[DerivationStep, ...]]
    theory: Theory


@dataclass(frozen=True)
class ProofGraph:
    """Immutable node/edge sets; node ids are statement ids plus NAF."""

    nodes: frozenset
    edges: frozenset

    @staticmethod
    def make(nodes, edges=()) -> "ProofGraph":
        return ProofGraph(frozenset(nodes), frozenset(tuple(e) for e in edges))


@dataclass(frozen=True)
class Example:
    id: str
    theory: Theory
    query: Query
    answer: bool
    depth: int
    gold_proofs: tuple[ProofGraph, ...]


def _check_stratified(theory: Theory):
    negated = set()
    heads = set()
    for s in theory.statements:
        if s.kind != RULE:
            continue
        heads.add(s.head.attribute)
        negated.update(lit.attribute for lit in s.body if lit.negated)
    bad = negated & heads
    if bad:
        raise StratificationError(
            f"attributes negated in a body and derived by a head: {sorted(bad)}")


def _groundings(s: Statement, entities: set[str]):
    """Entity bindings for a rule: one per entity for variable rules."""
    subjects = {lit.subject for lit in s.body} | {s.head.subject}
    if subjects == {"someone"}:
        return sorted(entities)
    (entity,) = subjects
    return [entity]


def forward_chain(theory: Theory) -> DerivationSet:
    """Least fixpoint of the rules over the stated facts, with depths.

    Depth of a stated fact is 0; a derived atom gets 1 + the maximal depth
    among the premises of the round that first produced it.  ``supports``
    records, against the final fixpoint, every rule application that yields
    each derived atom.
    """
    if not theory.statements:
        raise EmptyTheory("forward_chain needs at least one statement")
    _check_stratified(theory)

    entities = theory.entities()
    rules = [s for s in theory.statements if s.kind == RULE]
    depth: dict[Atom, int] = {}
    for s in theory.statements:
        if s.kind == FACT:
            depth.setdefault(s.fact, 0)

    derived = set(depth)
    while True:
        frontier: dict[Atom, int] = {}
        for rule in rules:
            for entity in _groundings(rule, entities):
                fired = _fires(rule, entity, derived)
                if fired is None:
                    continue
                premises, _ = fired
                head_atom = rule.head.ground(entity)
                if head_atom in derived:
                    continue
                d = 1 + max((depth[p] for p in premises), default=0)
                if head_atom not in frontier or d < frontier[head_atom]:
                    frontier[head_atom] = d
        if not frontier:
            break
        for atom, d in frontier.items():
            depth[atom] = d
            derived.add(atom)

    supports: dict[Atom, list[DerivationStep]] = {}
    for rule in rules:
        for entity in _groundings(rule, entities):
            fired = _fires(rule, entity, derived)
            if fired is None:
                continue
            premises, naf_atoms = fired
            head_atom = rule.head.ground(entity)
            step = DerivationStep(rule.id, premises, naf_atoms)
            supports.setdefault(head_atom, []).append(step)

    return DerivationSet(
        derived=frozenset(derived),
        depth=depth,
        supports={a: tuple(steps) for a, steps in supports.items()},
        theory=theory,
    )


def _fires(rule: Statement, entity: str, derived: set[Atom]):
    """Premise atoms and NAF atoms if the rule fires for ``entity``, else None."""
    premises: list[Atom] = []
    naf_atoms: list[Atom] = []
    for lit in rule.body:
        atom = lit.ground(entity)
        if lit.negated:
            if atom in derived:
                return None
            naf_atoms.append(atom)
        else:
            if atom not in derived:
                return None
            premises.append(atom)
    return tuple(premises), tuple(naf_atoms)


def answer_query(ds: DerivationSet, query: Query) -> bool:
    """Closed-world truth value: membership in the fixpoint, flipped if negated."""
    holds = query.atom in ds.derived
    return (not holds) if query.negated else holds


def extract_proofs(ds: DerivationSet, query: Query, cap: int = 8) -> tuple[ProofGraph, ...]:
    """All minimal proof graphs for the query's truth value, up to ``cap``.

    A true negated query and a false positive query both rest solely on
    failure and get the single-node NAF graph.  Otherwise proofs are the
    subset-minimal derivation graphs of the (counterpart) atom, ordered
    lexicographically by their sorted node-id tuple.
    """
    holds = query.atom in ds.derived
    if not holds:
        return (ProofGraph.make({NAF}),)

    fact_ids: dict[Atom, list[str]] = {}
    for s in ds.theory.statements:
        if s.kind == FACT:
            fact_ids.setdefault(s.fact, []).append(s.id)

    proofs = _proofs_of(ds, fact_ids, query.atom, frozenset())
    graphs = {(g.nodes, g.edges) for g, _root in proofs}

    minimal = []
    node_sets = [nodes for nodes, _ in graphs]
    for nodes, edges in graphs:
        if any(other < nodes for other in node_sets):
            continue
        minimal.append(ProofGraph(nodes, edges))
    minimal.sort(key=lambda g: (tuple(sorted(g.nodes)), tuple(sorted(g.edges))))
    return tuple(minimal[:cap])


def _proofs_of(ds, fact_ids, atom: Atom, visiting: frozenset):
    """Derivation graphs for ``atom`` as (graph, root-node-id) pairs."""
    out = [(ProofGraph.make({fid}), fid) for fid in fact_ids.get(atom, ())]
    if atom in visiting:
        return out
    sub = visiting | {atom}
    for step in ds.supports.get(atom, ()):
        if any(p in sub for p in step.premises):
            continue
        premise_choices = [_proofs_of(ds, fact_ids, p, sub) for p in step.premises]
        if any(not c for c in premise_choices):
            continue
        for combo in itertools.product(*premise_choices):
            nodes = {step.rule_id}
            edges = set()
            for graph, root in combo:
                nodes |= graph.nodes
                edges |= graph.edges
                edges.add((root, step.rule_id))
            if step.naf:
                nodes.add(NAF)
                edges.add((NAF, step.rule_id))
            out.append((ProofGraph.make(nodes, edges), step.rule_id))
            if len(out) >= _ENUM_LIMIT:
                return out
    return out


def query_depth(proofs: tuple[ProofGraph, ...]) -> int:
    """Minimum over proofs of the rule-node count on the longest path.

    Rule nodes are recognized as edge destinations, so fact-only and NAF-only
    graphs have depth 0.
    """
    return min(_longest_rule_path(g) for g in proofs)


def _longest_rule_path(g: ProofGraph) -> int:
    rule_nodes = {dst for _src, dst in g.edges}
    children: dict[object, list] = {n: [] for n in g.nodes}
    incoming = {n: 0 for n in g.nodes}
    for src, dst in g.edges:
        children[src].append(dst)
        incoming[dst] += 1

    best = {n: (1 if n in rule_nodes else 0) for n in g.nodes}
    ready = [n for n in g.nodes if incoming[n] == 0]
    order = []
    while ready:
        n = ready.pop()
        order.append(n)
        for c in children[n]:
            incoming[c] -= 1
            if incoming[c] == 0:
                ready.append(c)
    for n in order:
        for c in children[n]:
            weight = best[n] + (1 if c in rule_nodes else 0)
            if weight > best[c]:
                best[c] = weight
    return max(best.values()) if best else 0


def validate_proof_graph(graph: ProofGraph, kinds: dict) -> list[str]:
    """Structural checks C1..C5; returns a list of violation descriptions."""
    problems = []
    if not graph.nodes:
        problems.append("empty node set")
        return problems
    for src, dst in graph.edges:
        if src not in graph.nodes or dst not in graph.nodes:
            problems.append(f"edge ({src}, {dst}) leaves the node set")
        elif kinds.get(dst) != RULE:
            problems.append(f"edge destination {dst} is not a rule")
    if len(graph.nodes) == 1 and graph.edges:
        problems.append("single-node graph carries edges")
    if len(graph.nodes) >= 2 and not _weakly_connected(graph):
        problems.append("graph is not weakly connected")
    if _has_cycle(graph):
        problems.append("graph has a directed cycle")
    return problems


def _weakly_connected(graph: ProofGraph) -> bool:
    neighbours: dict[object, set] = {n: set() for n in graph.nodes}
    for src, dst in graph.edges:
        if src in neighbours and dst in neighbours:
            neighbours[src].add(dst)
            neighbours[dst].add(src)
    start = next(iter(graph.nodes))
    seen = {start}
    stack = [start]
    while stack:
        for nxt in neighbours[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen == graph.nodes


def _has_cycle(graph: ProofGraph) -> bool:
    children: dict[object, list] = {n: [] for n in graph.nodes}
    for src, dst in graph.edges:
        children.setdefault(src, []).append(dst)
    WHITE, GREY, BLACK = 0, 1, 2
    colour = {n: WHITE for n in children}
    for root in children:
        if colour[root] != WHITE:
            continue
        stack = [(root, iter(children[root]))]
        colour[root] = GREY
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if colour.get(nxt, WHITE) == GREY:
                    return True
                if colour.get(nxt, WHITE) == WHITE:
                    colour[nxt] = GREY
                    stack.append((nxt, iter(children.get(nxt, []))))
                    advanced = True
                    break
            if not advanced:
                colour[node] = BLACK
                stack.pop()
    return False
